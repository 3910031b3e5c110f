// Copyright 2026 The CMO Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <tuple>

#include "cmo/context.hpp"
#include "cmo/error.hpp"
#include "cmo/log.hpp"
#include "cmo/text_util.hpp"

namespace cmo {
namespace {

constexpr const char* kModule = "context_extraction";

const std::optional<std::string>& side_path(const FileDiff& fd, Side side) {
  return side == Side::kPost ? fd.new_path : fd.old_path;
}

bool is_code_block_role(const SourceFile& f, const Block& b) {
  switch (b.role) {
    case BlockRole::kStatement:
    case BlockRole::kMethodBody:
    case BlockRole::kLambda:
      return true;
    case BlockRole::kAnonymousBody:
      return b.parent >= 0 && f.blocks[b.parent].role != BlockRole::kTypeBody &&
             f.blocks[b.parent].role != BlockRole::kAnonymousBody;
    default:
      return false;
  }
}

// Source text of tokens [first, last], widened to the start of the first
// line when only indentation precedes it.
std::string token_range_text(const SourceFile& f, std::size_t first, std::size_t last) {
  std::size_t begin = f.tokens[first].begin;
  const std::string& src = *f.content;
  std::size_t b = begin;
  while (b > 0 && (src[b - 1] == ' ' || src[b - 1] == '\t')) --b;
  if (b == 0 || src[b - 1] == '\n') begin = b;
  return src.substr(begin, f.tokens[last].end - begin);
}

std::string offset_text(const SourceFile& f, std::size_t begin, std::size_t end) {
  const std::string& src = *f.content;
  std::size_t b = begin;
  while (b > 0 && (src[b - 1] == ' ' || src[b - 1] == '\t')) --b;
  if (b == 0 || src[b - 1] == '\n') begin = b;
  return src.substr(begin, end - begin);
}

std::string span_label(const std::string& path, LineSpan s) {
  return path + ":" + std::to_string(s.begin) + "-" + std::to_string(s.end);
}

// Index of the ')' matching the '(' at `open`, or tokens.size().
std::size_t matching_paren(const SourceFile& f, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < f.tokens.size(); ++i) {
    const auto& t = f.tokens[i];
    if (t.is("(") || t.is("[") || t.is("{")) ++depth;
    if (t.is(")") || t.is("]") || t.is("}")) {
      if (--depth == 0) return i;
    }
  }
  return f.tokens.size();
}

int call_arity(const SourceFile& f, std::size_t open) {
  auto close = matching_paren(f, open);
  if (close == f.tokens.size() || close == open + 1) return 0;
  int depth = 0;
  int commas = 0;
  for (std::size_t i = open + 1; i < close; ++i) {
    const auto& t = f.tokens[i];
    if (t.is("(") || t.is("[") || t.is("{")) ++depth;
    if (t.is(")") || t.is("]") || t.is("}")) --depth;
    if (depth == 0 && t.is(",")) ++commas;
  }
  return commas + 1;
}

bool is_call_site(const SourceFile& f, std::size_t i) {
  const auto& t = f.tokens;
  if (t[i].kind != TokenKind::kIdent || i + 1 >= t.size() || !t[i + 1].is("(")) return false;
  if (i == 0) return true;
  const auto& p = t[i - 1];
  if (p.is("new") || p.is("@") || p.is(">") || p.is("]")) return false;
  if (p.kind == TokenKind::kIdent) return false;  // declaration: `Type name(`
  if (p.kind == TokenKind::kKeyword && (p.is("void") || p.is("int") || p.is("long") || p.is("boolean") ||
                                        p.is("char") || p.is("byte") || p.is("short") || p.is("float") ||
                                        p.is("double"))) {
    return false;
  }
  return true;
}

struct LocatedDecl {
  const SourceFile* file = nullptr;
  const VariableDecl* var = nullptr;
};

std::vector<const TypeDecl*> enclosing_types(const SourceFile& f, int line) {
  std::vector<const TypeDecl*> out;
  for (const auto& t : f.types) {
    if (t.span.contains(line)) out.push_back(&t);
  }
  std::sort(out.begin(), out.end(), [](const TypeDecl* a, const TypeDecl* b) {
    return std::make_tuple(a->span.size(), -a->span.begin) < std::make_tuple(b->span.size(), -b->span.begin);
  });
  return out;
}

const VariableDecl* field_of(const SourceFile& f, const std::string& owner, std::string_view name) {
  for (const auto& v : f.variables) {
    if (v.kind == VariableKind::kField && v.owner == owner && v.name == name) return &v;
  }
  return nullptr;
}

LocatedDecl resolve_variable(const ProjectIndex& index, const SourceFile& f, std::string_view name, int line,
                             bool member_only) {
  if (!member_only) {
    const VariableDecl* best = nullptr;
    for (const auto& v : f.variables) {
      if (v.kind == VariableKind::kField || v.name != name) continue;
      if (!v.scope.contains(line) || v.line > line) continue;
      if (best == nullptr || v.line > best->line) best = &v;
    }
    if (best != nullptr) return {&f, best};
  }
  for (const TypeDecl* t : enclosing_types(f, line)) {
    if (const auto* v = field_of(f, t->qualified_name, name)) return {&f, v};
    std::string ext = t->extends;
    for (int depth = 0; depth < 8 && !ext.empty(); ++depth) {
      const SourceFile* sf = nullptr;
      const TypeDecl* st = index.lookup_type(ext, &sf);
      if (st == nullptr) break;
      if (const auto* v = field_of(*sf, st->qualified_name, name)) return {sf, v};
      ext = st->extends;
    }
  }
  return {};
}

template <typename Key>
bool insert_once(std::set<Key>& seen, Key key) {
  return seen.insert(std::move(key)).second;
}

void sort_by_locator(std::vector<ContextItem>& items) {
  std::stable_sort(items.begin(), items.end(), [](const ContextItem& a, const ContextItem& b) {
    auto key = [](const ContextItem& it) {
      return it.locator ? std::make_tuple(it.locator->path, static_cast<int>(it.locator->side),
                                          it.locator->span.begin, it.locator->span.end)
                        : std::make_tuple(std::string(), 0, 0, 0);
    };
    return key(a) < key(b);
  });
}

// Visits each (file, side, changed line set) for files the index parsed.
template <typename Fn>
void for_each_changed_file(const CommitDiff& diff, const ProjectIndex& index, Fn&& fn) {
  for (const auto& fd : diff.files) {
    if (fd.binary) continue;
    for (Side side : {Side::kPost, Side::kPre}) {
      const auto& path = side_path(fd, side);
      if (!path) continue;
      const SourceFile* f = index.find(*path, side);
      if (f == nullptr) continue;
      auto lines = changed_lines(diff, *path, side);
      if (!lines.empty()) fn(*f, lines);
    }
  }
}

std::string method_source(const SourceFile& f, const MethodDecl& m) {
  return offset_text(f, m.begin_offset, m.end_offset);
}

std::string class_outline(const SourceFile& f, const TypeDecl& t) {
  std::string out = t.kind + " " + t.qualified_name;
  if (!t.extends.empty()) out += " extends " + t.extends;
  for (const auto& v : f.variables) {
    if (v.kind == VariableKind::kField && v.owner == t.qualified_name) {
      out += "\n  field ";
      for (const auto& m : v.modifiers) out += m + " ";
      out += v.type + " " + v.name;
    }
  }
  for (const auto& m : f.methods) {
    if (m.owner == t.qualified_name) out += "\n  " + m.signature;
  }
  return out;
}

}  // namespace

std::string_view context_kind_name(ContextKind kind) {
  switch (kind) {
    case ContextKind::kImportantFileInfo: return "ImportantFileInfo";
    case ContextKind::kCommitType: return "CommitType";
    case ContextKind::kPullRequestIssueReport: return "PullRequestIssueReport";
    case ContextKind::kMethodBodySummary: return "MethodBodySummary";
    case ContextKind::kClassBodySummary: return "ClassBodySummary";
    case ContextKind::kEnclosingCodeBlock: return "EnclosingCodeBlock";
    case ContextKind::kCalleeKnowledge: return "CalleeKnowledge";
    case ContextKind::kVariableDataType: return "VariableDataType";
  }
  return "?";
}

ContextKind parse_context_kind(std::string_view name) {
  const auto wanted = to_lower(trim(name));
  for (auto k : kAllContextKinds) {
    if (to_lower(context_kind_name(k)) == wanted) return k;
  }
  throw Error(ErrorCode::kConfig, kModule, "unknown context kind '" + std::string(name) + "'");
}

bool is_injectable(ContextKind kind) { return kind != ContextKind::kCommitType; }

bool is_code_anchored(ContextKind kind) {
  switch (kind) {
    case ContextKind::kEnclosingCodeBlock:
    case ContextKind::kCalleeKnowledge:
    case ContextKind::kVariableDataType:
    case ContextKind::kMethodBodySummary:
    case ContextKind::kClassBodySummary:
      return true;
    default:
      return false;
  }
}

std::vector<ChangeRegion> change_regions(const CommitDiff& diff) {
  std::vector<ChangeRegion> out;
  for (const auto& fd : diff.files) {
    if (fd.binary) continue;
    for (const auto& h : fd.hunks) {
      int old_line = h.old_start;
      int new_line = h.new_start;
      int pre_lo = 0, pre_hi = 0, post_lo = 0, post_hi = 0;
      auto flush = [&] {
        if (post_lo > 0 && fd.new_path) {
          out.push_back({*fd.new_path, Side::kPost, {post_lo, post_hi}});
        } else if (pre_lo > 0 && fd.old_path) {
          out.push_back({*fd.old_path, Side::kPre, {pre_lo, pre_hi}});
        }
        pre_lo = pre_hi = post_lo = post_hi = 0;
      };
      for (const auto& l : h.lines) {
        switch (l.tag) {
          case LineTag::kContext:
            flush();
            ++old_line;
            ++new_line;
            break;
          case LineTag::kRemoved:
            if (pre_lo == 0) pre_lo = old_line;
            pre_hi = old_line++;
            break;
          case LineTag::kAdded:
            if (post_lo == 0) post_lo = new_line;
            post_hi = new_line++;
            break;
        }
      }
      flush();
    }
  }
  return out;
}

std::set<int> changed_lines(const CommitDiff& diff, std::string_view path, Side side) {
  std::set<int> out;
  for (const auto& fd : diff.files) {
    const auto& p = side_path(fd, side);
    if (!p || *p != path) continue;
    for (const auto& h : fd.hunks) {
      int old_line = h.old_start;
      int new_line = h.new_start;
      for (const auto& l : h.lines) {
        if (l.tag == LineTag::kContext) {
          ++old_line;
          ++new_line;
        } else if (l.tag == LineTag::kRemoved) {
          if (side == Side::kPre) out.insert(old_line);
          ++old_line;
        } else {
          if (side == Side::kPost) out.insert(new_line);
          ++new_line;
        }
      }
    }
  }
  return out;
}

std::vector<ContextItem> extract_enclosing_blocks(const CommitDiff& diff, const ProjectIndex& index) {
  std::vector<ContextItem> out;
  std::set<std::tuple<std::string, int, int, int>> seen;
  for (const auto& region : change_regions(diff)) {
    const SourceFile* f = index.find(region.path, region.side);
    if (f == nullptr) continue;
    const Block* best = nullptr;
    for (const auto& b : f->blocks) {
      if (!is_code_block_role(*f, b) || !b.span.contains(region.span)) continue;
      if (best == nullptr || b.span.size() < best->span.size() ||
          (b.span.size() == best->span.size() && b.open > best->open)) {
        best = &b;
      }
    }
    if (best == nullptr) {
      log::debug(kModule, "NoEnclosingBlock for " + span_label(region.path, region.span));
      continue;
    }
    if (!insert_once(seen, std::make_tuple(region.path, static_cast<int>(region.side), best->span.begin,
                                           best->span.end))) {
      continue;
    }
    ContextItem item;
    item.kind = ContextKind::kEnclosingCodeBlock;
    item.payload = token_range_text(*f, best->stmt_begin, best->stmt_end);
    item.locator = Locator{region.path, region.side, best->span};
    item.provenance = "enclosing_block(region=" + span_label(region.path, region.span) + ", side=" +
                      std::string(side_name(region.side)) + ")";
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<ContextItem> extract_callee_knowledge(const CommitDiff& diff, const ProjectIndex& index,
                                                  Summarizer* summarizer) {
  std::vector<std::pair<std::string, int>> calls;
  std::set<std::pair<std::string, int>> seen_calls;
  for_each_changed_file(diff, index, [&](const SourceFile& f, const std::set<int>& lines) {
    for (int line : lines) {
      for (auto ti : f.tokens_on_line(line)) {
        if (!is_call_site(f, ti)) continue;
        std::pair<std::string, int> call{std::string(f.tokens[ti].text), call_arity(f, ti + 1)};
        if (seen_calls.insert(call).second) calls.push_back(call);
      }
    }
  });

  std::vector<ContextItem> out;
  std::set<std::tuple<std::string, int, std::size_t>> seen;
  for (const auto& [name, arity] : calls) {
    for (const auto& ref : index.lookup_methods(name, arity)) {
      const auto& m = *ref.method;
      if (!m.has_body) continue;
      if (changed_lines(diff, ref.file->path, ref.file->side).count(m.name_line)) continue;
      if (!insert_once(seen, std::make_tuple(ref.file->path, static_cast<int>(ref.file->side), m.begin_offset))) {
        continue;
      }
      ContextItem item;
      item.kind = ContextKind::kCalleeKnowledge;
      item.locator = Locator{ref.file->path, ref.file->side, m.span};
      item.provenance = "callee_knowledge(call=" + name + "/" + std::to_string(arity) + ")";
      const std::string source = method_source(*ref.file, m);
      bool summarized = false;
      if (summarizer != nullptr) {
        try {
          item.payload = summarize_unit(source, UnitKind::kMethod, m.display_name(), *summarizer).payload;
          summarized = true;
        } catch (const Error& e) {
          log::warn(kModule, std::string("SummarizerUnavailable: ") + e.what());
        }
      }
      if (!summarized) {
        item.payload = m.display_name() + ":\n" + source;
        item.provenance += " raw_body";
      }
      out.push_back(std::move(item));
    }
  }
  sort_by_locator(out);
  return out;
}

std::vector<ContextItem> extract_variable_types(const CommitDiff& diff, const ProjectIndex& index) {
  std::vector<ContextItem> out;
  std::set<std::tuple<std::string, int, int, std::string>> seen;
  for_each_changed_file(diff, index, [&](const SourceFile& f, const std::set<int>& lines) {
    const auto& t = f.tokens;
    for (int line : lines) {
      for (auto ti : f.tokens_on_line(line)) {
        if (t[ti].kind != TokenKind::kIdent) continue;
        if (ti + 1 < t.size() && (t[ti + 1].is("(") || t[ti + 1].kind == TokenKind::kIdent)) continue;
        bool member_only = false;
        if (ti > 0 && (t[ti - 1].is("@") || t[ti - 1].is("::"))) continue;
        if (ti > 0 && t[ti - 1].is(".")) {
          if (ti < 2 || !t[ti - 2].is("this")) continue;
          member_only = true;
        }
        const std::string name(t[ti].text);
        auto found = resolve_variable(index, f, name, line, member_only);
        if (found.var == nullptr) continue;
        const auto& v = *found.var;
        if (v.type.empty()) continue;  // inferred lambda parameter
        if (changed_lines(diff, found.file->path, found.file->side).count(v.line)) continue;
        if (!insert_once(seen, std::make_tuple(found.file->path, static_cast<int>(found.file->side), v.line,
                                               v.name))) {
          continue;
        }
        std::string decl;
        for (const auto& m : v.modifiers) decl += m + " ";
        decl += v.type;
        ContextItem item;
        item.kind = ContextKind::kVariableDataType;
        item.payload = v.name + ": " + decl + "\n(" + std::string(variable_kind_name(v.kind)) + " of " +
                       (v.owner.empty() ? std::string("<file>") : v.owner) + ", declared at " + found.file->path +
                       ":" + std::to_string(v.line) + ")";
        item.locator = Locator{found.file->path, found.file->side, {v.line, v.line}};
        item.provenance = "variable_type(use=" + f.path + ":" + std::to_string(line) + ")";
        out.push_back(std::move(item));
      }
    }
  });
  sort_by_locator(out);
  return out;
}

std::vector<ContextItem> extract_unit_summaries(const CommitDiff& diff, const ProjectIndex& index,
                                                Summarizer* summarizer) {
  std::vector<ContextItem> methods;
  std::vector<ContextItem> classes;
  std::set<std::tuple<std::string, int, std::size_t>> seen_m, seen_c;
  for (const auto& region : change_regions(diff)) {
    const SourceFile* f = index.find(region.path, region.side);
    if (f == nullptr) continue;
    const MethodDecl* best_m = nullptr;
    for (const auto& m : f->methods) {
      if (!m.has_body || !m.span.contains(region.span.begin)) continue;
      if (best_m == nullptr || m.span.size() < best_m->span.size()) best_m = &m;
    }
    auto types = enclosing_types(*f, region.span.begin);
    const TypeDecl* best_t = types.empty() ? nullptr : types.front();

    auto summarize_or = [&](const std::string& source, UnitKind kind, const std::string& name,
                            const std::string& fallback, ContextItem& item) {
      if (summarizer != nullptr) {
        try {
          item.payload = summarize_unit(source, kind, name, *summarizer).payload;
          return;
        } catch (const Error& e) {
          log::warn(kModule, std::string("SummarizerUnavailable: ") + e.what());
        }
      }
      item.payload = fallback;
      item.provenance += " outline";
    };

    if (best_m != nullptr &&
        insert_once(seen_m, std::make_tuple(f->path, static_cast<int>(f->side), best_m->begin_offset))) {
      ContextItem item;
      item.kind = ContextKind::kMethodBodySummary;
      item.locator = Locator{f->path, f->side, best_m->span};
      item.provenance = "unit_summary(method=" + best_m->display_name() + ")";
      summarize_or(method_source(*f, *best_m), UnitKind::kMethod, best_m->display_name(),
                   best_m->display_name() + ": " + best_m->signature, item);
      methods.push_back(std::move(item));
    }
    if (best_t != nullptr &&
        insert_once(seen_c, std::make_tuple(f->path, static_cast<int>(f->side), best_t->begin_offset))) {
      ContextItem item;
      item.kind = ContextKind::kClassBodySummary;
      item.locator = Locator{f->path, f->side, best_t->span};
      item.provenance = "unit_summary(class=" + best_t->qualified_name + ")";
      summarize_or(offset_text(*f, best_t->begin_offset, best_t->end_offset), UnitKind::kClass,
                   best_t->qualified_name, best_t->qualified_name + ": " + class_outline(*f, *best_t), item);
      classes.push_back(std::move(item));
    }
  }
  sort_by_locator(methods);
  sort_by_locator(classes);
  methods.insert(methods.end(), classes.begin(), classes.end());
  return methods;
}

std::map<ContextKind, std::vector<ContextItem>> collect_contexts(const CommitDiff& diff, const ProjectIndex& index,
                                                                 std::string_view message,
                                                                 const ExtractionOptions& opts) {
  std::map<ContextKind, std::vector<ContextItem>> out;
  if (!diff.files.empty()) out[ContextKind::kImportantFileInfo].push_back(rank_important_files(diff));
  if (auto issue = link_issue_or_pr(message, diff, opts.forge, opts.issue_byte_budget)) {
    out[ContextKind::kPullRequestIssueReport].push_back(std::move(*issue));
  }
  for (auto& item : extract_unit_summaries(diff, index, opts.summarizer)) out[item.kind].push_back(std::move(item));
  auto put = [&](ContextKind kind, std::vector<ContextItem> items) {
    if (!items.empty()) out[kind] = std::move(items);
  };
  put(ContextKind::kEnclosingCodeBlock, extract_enclosing_blocks(diff, index));
  put(ContextKind::kCalleeKnowledge, extract_callee_knowledge(diff, index, opts.summarizer));
  put(ContextKind::kVariableDataType, extract_variable_types(diff, index));
  return out;
}

}  // namespace cmo
