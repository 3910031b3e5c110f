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
#include <stdexcept>
#include <unordered_set>

#include "cmo/log.hpp"
#include "cmo/source_index.hpp"

namespace cmo {
namespace {

const std::unordered_set<std::string_view>& keywords() {
  static const std::unordered_set<std::string_view> kw = {
      "abstract", "assert",     "boolean",   "break",     "byte",      "case",      "catch",
      "char",     "class",      "const",     "continue",  "default",   "do",        "double",
      "else",     "enum",       "extends",   "final",     "finally",   "float",     "for",
      "goto",     "if",         "implements", "import",   "instanceof", "int",      "interface",
      "long",     "native",     "new",       "package",   "private",   "protected", "public",
      "return",   "short",      "static",    "strictfp",  "super",     "switch",    "synchronized",
      "this",     "throw",      "throws",    "transient", "try",       "void",      "volatile",
      "while",    "true",       "false",     "null"};
  return kw;
}

const std::unordered_set<std::string_view>& primitive_types() {
  static const std::unordered_set<std::string_view> p = {"boolean", "byte", "char", "short", "int",
                                                         "long",    "float", "double", "void"};
  return p;
}

const std::unordered_set<std::string_view>& modifier_keywords() {
  static const std::unordered_set<std::string_view> m = {
      "public", "private", "protected", "static", "final", "transient", "volatile",
      "abstract", "default", "synchronized", "native", "strictfp"};
  return m;
}

bool is_ident_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' || c >= 0x80;
}
bool is_ident_char(unsigned char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

[[noreturn]] void parse_error(int line, const std::string& what) {
  throw std::runtime_error("line " + std::to_string(line) + ": " + what);
}

// ---------------------------------------------------------------------------
// Structural analysis of one token stream.

class JavaStructure {
 public:
  explicit JavaStructure(SourceFile& file) : f_(file), t_(file.tokens), n_(file.tokens.size()) {}

  void run() {
    match_pairs();
    find_blocks();
    collect_types();
    collect_members();
    collect_locals();
    collect_lambda_params();
  }

 private:
  bool is(std::size_t i, std::string_view s) const { return i < n_ && t_[i].is(s); }
  bool ident(std::size_t i) const { return i < n_ && t_[i].kind == TokenKind::kIdent; }
  bool keyword(std::size_t i) const { return i < n_ && t_[i].kind == TokenKind::kKeyword; }

  void match_pairs() {
    partner_.assign(n_, npos);
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < n_; ++i) {
      if (t_[i].kind != TokenKind::kPunct) continue;
      auto c = t_[i].text;
      if (c == "(" || c == "[" || c == "{") {
        stack.push_back(i);
      } else if (c == ")" || c == "]" || c == "}") {
        if (stack.empty()) parse_error(t_[i].line, "unbalanced '" + std::string(c) + "'");
        auto o = stack.back();
        stack.pop_back();
        auto oc = t_[o].text;
        if ((c == ")" && oc != "(") || (c == "]" && oc != "[") || (c == "}" && oc != "{")) {
          parse_error(t_[i].line, "mismatched '" + std::string(oc) + "' and '" + std::string(c) + "'");
        }
        partner_[o] = i;
        partner_[i] = o;
      }
    }
    if (!stack.empty()) parse_error(t_[stack.back()].line, "unclosed '" + std::string(t_[stack.back()].text) + "'");
  }

  std::size_t scan_back(std::size_t o) const {
    std::size_t j = o;
    while (j > 0) {
      const auto& t = t_[j - 1];
      if (t.is(")") || t.is("]")) {
        j = partner_[j - 1];
        continue;
      }
      if (t.is(";") || t.is("{") || t.is("}") || t.is("(") || t.is("[")) break;
      --j;
    }
    return j;
  }

  // Index of the last token of the statement starting at k.
  std::size_t statement_end(std::size_t k) const {
    if (k >= n_) return n_ - 1;
    if (is(k, "{")) return partner_[k];
    if (is(k, "if")) {
      std::size_t p = k + 1;
      if (!is(p, "(")) return scan_to_semicolon(k);
      auto end = statement_end(partner_[p] + 1);
      if (is(end + 1, "else")) end = statement_end(end + 2);
      return end;
    }
    if (is(k, "for") || is(k, "while") || is(k, "synchronized") || is(k, "switch")) {
      std::size_t p = k + 1;
      if (!is(p, "(")) return scan_to_semicolon(k);
      return statement_end(partner_[p] + 1);
    }
    if (is(k, "try")) {
      std::size_t p = k + 1;
      if (is(p, "(")) p = partner_[p] + 1;
      if (!is(p, "{")) return scan_to_semicolon(k);
      return extend_chain(partner_[p], false);
    }
    if (is(k, "do")) {
      auto end = statement_end(k + 1);
      if (is(end + 1, "while") && is(end + 2, "(")) {
        auto close = partner_[end + 2];
        return is(close + 1, ";") ? close + 1 : close;
      }
      return end;
    }
    return scan_to_semicolon(k);
  }

  std::size_t scan_to_semicolon(std::size_t k) const {
    std::size_t j = k;
    while (j < n_) {
      const auto& t = t_[j];
      if (t.is("(") || t.is("[") || t.is("{")) {
        j = partner_[j] + 1;
        continue;
      }
      if (t.is(";")) return j;
      if (t.is(")") || t.is("]") || t.is("}")) return j > k ? j - 1 : k;
      ++j;
    }
    return n_ - 1;
  }

  // Extends a statement ending at `close` over catch/finally/else clauses and
  // a trailing do-while condition.
  std::size_t extend_chain(std::size_t close, bool is_do) const {
    std::size_t end = close;
    std::size_t k = close + 1;
    while (k < n_) {
      if (is(k, "catch") && is(k + 1, "(") && is(partner_[k + 1] + 1, "{")) {
        end = partner_[partner_[k + 1] + 1];
        k = end + 1;
        continue;
      }
      if (is(k, "finally") && is(k + 1, "{")) {
        end = partner_[k + 1];
        k = end + 1;
        continue;
      }
      if (is(k, "else")) {
        end = statement_end(k + 1);
        break;
      }
      break;
    }
    if (is_do && is(end + 1, "while") && is(end + 2, "(")) {
      auto c = partner_[end + 2];
      end = is(c + 1, ";") ? c + 1 : c;
    }
    return end;
  }

  std::size_t forward_to_statement_end(std::size_t close) const {
    std::size_t j = close + 1;
    while (j < n_) {
      const auto& t = t_[j];
      if (t.is("(") || t.is("[") || t.is("{")) {
        j = partner_[j] + 1;
        continue;
      }
      if (t.is(";")) return j;
      if (t.is(")") || t.is("]") || t.is("}")) return close;
      ++j;
    }
    return close;
  }

  bool header_has(std::size_t s, std::size_t o, std::string_view word) const {
    for (std::size_t i = s; i < o; ++i) {
      if (t_[i].is(word)) return true;
    }
    return false;
  }

  // Index of the class/interface/enum/record keyword in [s, o), or npos.
  std::size_t type_keyword(std::size_t s, std::size_t o) const {
    for (std::size_t i = s; i < o; ++i) {
      if (i > s && t_[i - 1].is(".")) continue;
      if ((is(i, "class") || is(i, "interface") || is(i, "enum")) && ident(i + 1)) return i;
      if (ident(i) && t_[i].text == "record" && ident(i + 1) && (is(i + 2, "(") || is(i + 2, "<"))) return i;
    }
    return npos;
  }

  bool top_level_paren(std::size_t s, std::size_t o) const {
    for (std::size_t i = s; i < o; ++i) {
      if (is(i, "@")) {
        // skip annotation name and its arguments
        i += 1;
        while (i + 2 < o && is(i + 1, ".") && ident(i + 2)) i += 2;
        if (is(i + 1, "(")) i = partner_[i + 1];
        continue;
      }
      if (is(i, "(")) return true;
    }
    return false;
  }

  void find_blocks() {
    std::vector<int> open_stack;
    std::vector<int> block_of_open(n_, -1);
    for (std::size_t i = 0; i < n_; ++i) {
      if (t_[i].is("}")) {
        if (!open_stack.empty()) open_stack.pop_back();
        continue;
      }
      if (!t_[i].is("{")) continue;
      Block b;
      b.open = i;
      b.close = partner_[i];
      b.parent = open_stack.empty() ? -1 : open_stack.back();
      classify(b);
      b.span = {t_[b.stmt_begin].line, t_[b.stmt_end].end_line};
      block_of_open[i] = static_cast<int>(f_.blocks.size());
      f_.blocks.push_back(b);
      open_stack.push_back(block_of_open[i]);
    }
  }

  const Block* parent_of(const Block& b) const { return b.parent < 0 ? nullptr : &f_.blocks[b.parent]; }

  void classify(Block& b) {
    const std::size_t o = b.open;
    const Block* parent = parent_of(b);
    const bool parent_is_type =
        parent == nullptr || parent->role == BlockRole::kTypeBody || parent->role == BlockRole::kAnonymousBody;
    b.stmt_begin = o;
    b.stmt_end = b.close;

    if (o > 0) {
      const auto& p = t_[o - 1];
      if (parent != nullptr && parent->role == BlockRole::kInitializer && (p.is("{") || p.is(","))) {
        b.role = BlockRole::kInitializer;
        return;
      }
      if (p.is("=") || p.is("]") || p.is("(") || p.is(",")) {
        b.role = BlockRole::kInitializer;
        return;
      }
      if (p.is("->")) {
        b.role = BlockRole::kLambda;
        return;
      }
    }

    if (parent != nullptr && parent_is_enum(*parent) && in_enum_constant_section(*parent, o)) {
      std::size_t s = o;
      while (s > parent->open + 1 && !is(s - 1, ",")) {
        s = (is(s - 1, ")") ? partner_[s - 1] : s - 1);
      }
      b.role = BlockRole::kAnonymousBody;
      b.stmt_begin = s;
      return;
    }

    const std::size_t s = scan_back(o);
    b.stmt_begin = s;
    if (type_keyword(s, o) != npos) {
      b.role = BlockRole::kTypeBody;
      return;
    }

    static const std::unordered_set<std::string_view> control = {
        "if", "else", "for", "while", "do", "try", "catch", "finally", "switch", "synchronized", "case", "default"};
    const bool empty_header = s == o;
    const bool starts_control = !empty_header && t_[s].kind == TokenKind::kKeyword && control.count(t_[s].text) &&
                                !(t_[s].is("default") && top_level_paren(s, o));
    const bool static_init = o - s == 1 && t_[s].is("static");

    if (!empty_header && !starts_control && !static_init && o > 0 && t_[o - 1].is(")") && header_has(s, o, "new") &&
        !header_has(s, o, "switch")) {
      b.role = BlockRole::kAnonymousBody;
      b.stmt_end = forward_to_statement_end(b.close);
      return;
    }

    if (parent_is_type && !empty_header && !starts_control && !static_init && top_level_paren(s, o)) {
      b.role = BlockRole::kMethodBody;
      return;
    }
    b.role = BlockRole::kStatement;
    if (!empty_header && t_[s].kind == TokenKind::kKeyword &&
        (t_[s].is("else") || t_[s].is("catch") || t_[s].is("finally")) && s > 0 && t_[s - 1].is("}")) {
      // Part of an if/try chain: the statement starts at the chain head.
      for (const auto& prev : f_.blocks) {
        if (prev.close == s - 1) {
          b.stmt_begin = prev.stmt_begin;
          break;
        }
      }
    }
    const bool is_do = !empty_header && t_[b.stmt_begin].is("do");
    b.stmt_end = extend_chain(b.close, is_do);
    if (!empty_header && !starts_control && !static_init && b.stmt_end == b.close) {
      // Brace-bodied expression inside a statement, e.g. `x = switch (y) {...};`.
      b.stmt_end = forward_to_statement_end(b.close);
    }
  }

  bool in_enum_constant_section(const Block& body, std::size_t o) const {
    for (std::size_t i = body.open + 1; i < o; ++i) {
      if (is(i, "(") || is(i, "{") || is(i, "[")) {
        i = partner_[i];
        continue;
      }
      if (is(i, ";")) return false;
    }
    return true;
  }

  bool parent_is_enum(const Block& parent) const {
    if (parent.role != BlockRole::kTypeBody) return false;
    auto k = type_keyword(parent.stmt_begin, parent.open);
    return k != npos && t_[k].is("enum");
  }

  // -------------------------------------------------------------------------

  std::string qualified_owner(int block_idx) const {
    std::vector<std::string> parts;
    for (int b = block_idx; b >= 0; b = f_.blocks[b].parent) {
      const auto& blk = f_.blocks[b];
      if (blk.role != BlockRole::kTypeBody) continue;
      auto k = type_keyword(blk.stmt_begin, blk.open);
      if (k != npos) parts.emplace_back(t_[k + 1].text);
    }
    std::string q;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
      if (!q.empty()) q += ".";
      q += *it;
    }
    return q;
  }

  int enclosing_type_block(int block_idx) const {
    for (int b = block_idx; b >= 0; b = f_.blocks[b].parent) {
      if (f_.blocks[b].role == BlockRole::kTypeBody) return b;
    }
    return -1;
  }

  void collect_types() {
    for (std::size_t bi = 0; bi < f_.blocks.size(); ++bi) {
      const auto& b = f_.blocks[bi];
      if (b.role != BlockRole::kTypeBody) continue;
      auto k = type_keyword(b.stmt_begin, b.open);
      TypeDecl td;
      td.name = std::string(t_[k + 1].text);
      td.kind = (k > 0 && t_[k - 1].is("@")) ? "@interface" : std::string(t_[k].text);
      td.qualified_name = qualified_owner(static_cast<int>(bi));
      for (std::size_t i = k + 2; i < b.open; ++i) {
        if (is(i, "<")) i = skip_angles(i, b.open) - 1;
        if (is(i, "extends") && ident(i + 1)) {
          std::size_t j = i + 1;
          while (is(j + 1, ".") && ident(j + 2)) j += 2;
          td.extends = std::string(t_[j].text);
          break;
        }
        if (is(i, "implements") || is(i, "permits")) break;
      }
      td.span = b.span;
      td.begin_offset = t_[b.stmt_begin].begin;
      td.end_offset = t_[b.stmt_end].end;
      td.block = static_cast<int>(bi);
      f_.types.push_back(std::move(td));
    }
  }

  // Returns the index after a balanced <...> starting at i (bounded by limit).
  std::size_t skip_angles(std::size_t i, std::size_t limit) const {
    int depth = 0;
    for (std::size_t j = i; j < limit; ++j) {
      if (is(j, "<")) ++depth;
      if (is(j, ">")) {
        if (--depth == 0) return j + 1;
      }
      if (is(j, "(") || is(j, "[")) j = partner_[j];
    }
    return limit;
  }

  std::size_t skip_annotation(std::size_t i) const {
    // i at '@'
    std::size_t j = i + 1;
    if (is(j, "interface")) return i;
    if (!ident(j)) return i + 1;
    while (is(j + 1, ".") && ident(j + 2)) j += 2;
    ++j;
    if (is(j, "(")) j = partner_[j] + 1;
    return j;
  }

  // Parses a type at i; returns the index after it, or npos.
  std::size_t parse_type(std::size_t i, std::size_t limit, std::string& text) const {
    if (i >= limit) return npos;
    std::size_t start = i;
    if (keyword(i)) {
      if (!primitive_types().count(t_[i].text)) return npos;
      ++i;
    } else if (ident(i)) {
      ++i;
      while (i + 1 < limit && is(i, ".") && ident(i + 1)) i += 2;
      if (is(i, "<")) {
        int depth = 0;
        std::size_t j = i;
        for (; j < limit; ++j) {
          const auto& t = t_[j];
          if (t.is("<")) {
            ++depth;
          } else if (t.is(">")) {
            if (--depth == 0) break;
          } else if (!(t.kind == TokenKind::kIdent || t.is(",") || t.is("?") || t.is(".") || t.is("[") ||
                       t.is("]") || t.is("&") || t.is("extends") || t.is("super") ||
                       (t.kind == TokenKind::kKeyword && primitive_types().count(t.text)))) {
            return npos;
          }
        }
        if (j >= limit) return npos;
        i = j + 1;
        while (i + 1 < limit && is(i, ".") && ident(i + 1)) i += 2;
      }
    } else {
      return npos;
    }
    while (i + 1 < limit && is(i, "[") && is(i + 1, "]")) i += 2;
    text = join_tokens(start, i);
    return i;
  }

  std::string join_tokens(std::size_t a, std::size_t b) const {
    std::string s;
    auto wordy = [&](std::size_t k) {
      return t_[k].kind == TokenKind::kIdent || t_[k].kind == TokenKind::kKeyword || t_[k].kind == TokenKind::kNumber;
    };
    for (std::size_t k = a; k < b; ++k) {
      if (k > a) {
        bool space = (wordy(k) && (wordy(k - 1) || t_[k - 1].is(">") || t_[k - 1].is("...") || t_[k - 1].is("]"))) ||
                     t_[k - 1].is(",") || t_[k].is("&") || t_[k - 1].is("&") || t_[k].is("|") || t_[k - 1].is("|") ||
                     ((t_[k].is("extends") || t_[k].is("super")) && !s.empty() && s.back() == '?') ||
                     t_[k].is("{") || (t_[k - 1].is(")") && wordy(k));
        if (space) s.push_back(' ');
      }
      s.append(t_[k].text);
    }
    return s;
  }

  // Header of a method declared at [s, o): the name token index.
  std::size_t method_name_index(std::size_t s, std::size_t o) const {
    for (std::size_t i = s; i < o; ++i) {
      if (is(i, "@")) {
        i = skip_annotation(i) - 1;
        continue;
      }
      if (is(i, "<")) {
        i = skip_angles(i, o) - 1;
        continue;
      }
      if (ident(i) && is(i + 1, "(")) return i;
    }
    return npos;
  }

  void add_method(std::size_t s, std::size_t header_end, std::size_t name_i, int block_idx, int owner_block,
                  std::size_t body_close) {
    MethodDecl m;
    m.name = std::string(t_[name_i].text);
    m.owner = qualified_owner(owner_block);
    m.name_line = t_[name_i].line;
    auto po = name_i + 1;
    auto pc = partner_[po];
    auto params = split_params(po + 1, pc);
    m.arity = static_cast<int>(params.size());
    for (const auto& [a, b] : params) {
      for (std::size_t k = a; k < b; ++k) {
        if (is(k, "...")) m.varargs = true;
      }
    }
    // No return type before the name: constructor.
    std::size_t k = s;
    while (k < name_i) {
      if (is(k, "@")) {
        k = skip_annotation(k);
        continue;
      }
      if (keyword(k) && modifier_keywords().count(t_[k].text)) {
        ++k;
        continue;
      }
      if (is(k, "<")) {
        k = skip_angles(k, name_i);
        continue;
      }
      break;
    }
    m.constructor = k == name_i;
    std::size_t sig_begin = s;
    while (sig_begin < name_i && is(sig_begin, "@")) sig_begin = skip_annotation(sig_begin);
    m.signature = join_tokens(sig_begin, header_end);
    m.span = {t_[s].line, t_[body_close].end_line};
    m.begin_offset = t_[s].begin;
    m.end_offset = t_[body_close].end;
    m.block = block_idx;
    if (block_idx >= 0) {
      const auto& b = f_.blocks[block_idx];
      m.body_span = {t_[b.open].line, t_[b.close].end_line};
      m.has_body = true;
      for (const auto& [a, e] : params) add_parameter(a, e, m.owner, m.body_span);
    } else {
      m.has_body = false;
      for (const auto& [a, e] : params) add_parameter(a, e, m.owner, m.span);
    }
    f_.methods.push_back(std::move(m));
  }

  std::vector<std::pair<std::size_t, std::size_t>> split_params(std::size_t a, std::size_t b) const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (a >= b) return out;
    int angle = 0;
    std::size_t start = a;
    for (std::size_t i = a; i < b; ++i) {
      if (is(i, "(") || is(i, "[") || is(i, "{")) {
        i = partner_[i];
        continue;
      }
      if (is(i, "<")) ++angle;
      if (is(i, ">")) --angle;
      if (is(i, ",") && angle <= 0) {
        out.emplace_back(start, i);
        start = i + 1;
      }
    }
    out.emplace_back(start, b);
    return out;
  }

  void add_parameter(std::size_t a, std::size_t b, const std::string& owner, LineSpan scope) {
    std::size_t k = a;
    std::vector<std::string> mods;
    while (k < b) {
      if (is(k, "@")) {
        k = skip_annotation(k);
        continue;
      }
      if (is(k, "final")) {
        mods.emplace_back("final");
        ++k;
        continue;
      }
      break;
    }
    std::size_t name_i = b;
    while (name_i > k && !ident(name_i - 1)) --name_i;
    if (name_i <= k) return;
    --name_i;
    if (name_i == k) return;  // receiver or malformed
    VariableDecl v;
    v.name = std::string(t_[name_i].text);
    v.type = join_tokens(k, name_i);
    for (std::size_t d = name_i + 1; d + 1 < b + 1 && is(d, "["); d += 2) v.type += "[]";
    v.modifiers = std::move(mods);
    v.kind = VariableKind::kParameter;
    v.owner = owner;
    v.line = t_[name_i].line;
    v.scope = scope;
    f_.variables.push_back(std::move(v));
  }

  // Declarators after a type: name [dims] [= init] (, name ...)* up to `limit`
  // terminator. Returns false if the tokens are not a declaration.
  bool parse_declarators(std::size_t i, std::size_t limit, const std::string& type,
                         const std::vector<std::string>& mods, VariableKind kind, const std::string& owner,
                         LineSpan scope, bool allow_colon) {
    std::vector<VariableDecl> found;
    while (true) {
      if (!ident(i) || i >= limit) return false;
      VariableDecl v;
      v.name = std::string(t_[i].text);
      v.type = type;
      v.modifiers = mods;
      v.kind = kind;
      v.owner = owner;
      v.line = t_[i].line;
      v.scope = scope;
      ++i;
      while (is(i, "[") && is(i + 1, "]")) {
        v.type += "[]";
        i += 2;
      }
      found.push_back(std::move(v));
      if (i >= limit || is(i, ";") || (allow_colon && is(i, ":"))) break;
      if (is(i, "=")) {
        // skip initializer up to ',' or terminator at depth 0
        ++i;
        while (i < limit && !is(i, ",") && !is(i, ";")) {
          if (is(i, "(") || is(i, "[") || is(i, "{")) {
            i = partner_[i] + 1;
            continue;
          }
          ++i;
        }
        if (i >= limit || is(i, ";")) break;
      }
      if (is(i, ",")) {
        ++i;
        continue;
      }
      return false;
    }
    for (auto& v : found) f_.variables.push_back(std::move(v));
    return true;
  }

  void collect_members() {
    for (std::size_t bi = 0; bi < f_.blocks.size(); ++bi) {
      const auto& b = f_.blocks[bi];
      if (b.role == BlockRole::kMethodBody) {
        auto name_i = method_name_index(b.stmt_begin, b.open);
        if (name_i == npos) continue;
        add_method(b.stmt_begin, b.open, name_i, static_cast<int>(bi), enclosing_type_block(static_cast<int>(bi)),
                   b.close);
        continue;
      }
      if (b.role != BlockRole::kTypeBody && b.role != BlockRole::kAnonymousBody) continue;
      const int owner_block = b.role == BlockRole::kTypeBody ? static_cast<int>(bi)
                                                             : enclosing_type_block(static_cast<int>(bi));
      const std::string owner = qualified_owner(owner_block);
      const LineSpan scope{t_[b.open].line, t_[b.close].end_line};
      bool in_enum_constants = b.role == BlockRole::kTypeBody && parent_is_enum_block(b);

      std::size_t start = b.open + 1;
      for (std::size_t i = start; i < b.close; ++i) {
        if (is(i, "(") || is(i, "[")) {
          i = partner_[i];
          continue;
        }
        if (is(i, "{")) {
          // nested member with a body (method, type, initializer): skip it
          auto close = partner_[i];
          const Block* nested = block_at(i);
          if (nested != nullptr && nested->role == BlockRole::kInitializer) {
            i = close;
            continue;
          }
          if (nested != nullptr && nested->role == BlockRole::kAnonymousBody) {
            i = close;
            continue;
          }
          i = close;
          start = i + 1;
          continue;
        }
        if (is(i, ";")) {
          if (in_enum_constants) {
            in_enum_constants = false;
          } else {
            member_statement(start, i, owner, owner_block, scope);
          }
          start = i + 1;
        }
      }
    }
  }

  bool parent_is_enum_block(const Block& b) const {
    auto k = type_keyword(b.stmt_begin, b.open);
    return k != npos && t_[k].is("enum");
  }

  const Block* block_at(std::size_t open) const {
    auto it = std::lower_bound(f_.blocks.begin(), f_.blocks.end(), open,
                               [](const Block& b, std::size_t v) { return b.open < v; });
    return (it != f_.blocks.end() && it->open == open) ? &*it : nullptr;
  }

  void member_statement(std::size_t a, std::size_t semi, const std::string& owner, int owner_block,
                        LineSpan scope) {
    std::size_t k = a;
    std::vector<std::string> mods;
    while (k < semi) {
      if (is(k, "@") && !is(k + 1, "interface")) {
        k = skip_annotation(k);
        continue;
      }
      if (keyword(k) && modifier_keywords().count(t_[k].text)) {
        mods.emplace_back(t_[k].text);
        ++k;
        continue;
      }
      break;
    }
    if (k >= semi) return;
    // Abstract / interface method: ... name ( ... ) [throws ...] ;
    for (std::size_t i = k; i < semi; ++i) {
      if (is(i, "=")) break;
      if (is(i, "(")) {
        if (ident(i - 1) && i - 1 >= k) {
          std::size_t s = a;
          add_method(s, semi, i - 1, -1, owner_block, semi);
        }
        return;
      }
    }
    std::string type;
    auto after = parse_type(k, semi, type);
    if (after == npos) return;
    parse_declarators(after, semi + 1, type, mods, VariableKind::kField, owner, scope, false);
  }

  void collect_locals() {
    for (std::size_t bi = 0; bi < f_.blocks.size(); ++bi) {
      const auto& b = f_.blocks[bi];
      if (b.role != BlockRole::kMethodBody && b.role != BlockRole::kStatement && b.role != BlockRole::kLambda) {
        continue;
      }
      const std::string owner = qualified_owner(enclosing_type_block(static_cast<int>(bi)));
      const LineSpan block_scope{t_[b.open].line, t_[b.close].end_line};
      bool at_start = true;
      for (std::size_t i = b.open + 1; i < b.close; ++i) {
        if (at_start) {
          local_statement(i, b.close, owner, block_scope);
          at_start = false;
        }
        if (is(i, "(") || is(i, "[")) {
          i = partner_[i];
          continue;
        }
        if (is(i, "{")) {
          i = partner_[i];
          at_start = true;
          continue;
        }
        if (is(i, ";")) {
          at_start = true;
          continue;
        }
        if (is(i, ":") || is(i, "->")) {
          // after a case label
          std::size_t j = i;
          while (j > b.open && !is(j - 1, ";") && !is(j - 1, "{") && !is(j - 1, "}")) --j;
          if (is(j, "case") || is(j, "default")) at_start = true;
        }
      }
    }
  }

  int innermost_block(std::size_t pos) const {
    int best = -1;
    for (std::size_t bi = 0; bi < f_.blocks.size(); ++bi) {
      const auto& b = f_.blocks[bi];
      if (b.open < pos && pos < b.close) best = static_cast<int>(bi);
    }
    return best;
  }

  // Last token of an expression-bodied lambda starting at `i`.
  std::size_t lambda_expression_end(std::size_t i) const {
    std::size_t last = i;
    while (i < n_ && !is(i, ",") && !is(i, ";") && !is(i, ")") && !is(i, "]") && !is(i, "}")) {
      if (is(i, "(") || is(i, "[") || is(i, "{")) i = partner_[i];
      last = i;
      ++i;
    }
    return last;
  }

  bool in_case_label(std::size_t i) const {
    while (i > 0) {
      --i;
      if (is(i, ";") || is(i, "{") || is(i, "}") || is(i, "->") || is(i, ":")) return false;
      if (is(i, "case")) return true;
    }
    return false;
  }

  void collect_lambda_params() {
    for (std::size_t i = 1; i < n_; ++i) {
      if (!is(i, "->")) continue;
      std::size_t end = is(i + 1, "{") ? partner_[i + 1] : lambda_expression_end(i + 1);
      if (end >= n_) continue;
      const LineSpan scope{t_[i].line, t_[end].end_line};
      const std::string owner = qualified_owner(enclosing_type_block(innermost_block(i)));
      auto add_inferred = [&](std::size_t k) {
        VariableDecl v;
        v.name = std::string(t_[k].text);
        v.kind = VariableKind::kParameter;
        v.owner = owner;
        v.line = t_[k].line;
        v.scope = scope;
        f_.variables.push_back(std::move(v));
      };
      if (ident(i - 1)) {
        if (!in_case_label(i - 1)) add_inferred(i - 1);
        continue;
      }
      if (!is(i - 1, ")")) continue;
      auto open = partner_[i - 1];
      if (in_case_label(open)) continue;
      for (const auto& [a, b] : split_params(open + 1, i - 1)) {
        if (b == a + 1 && ident(a)) {
          add_inferred(a);
        } else if (b > a) {
          add_parameter(a, b, owner, scope);
        }
      }
    }
  }

  void local_statement(std::size_t i, std::size_t limit, const std::string& owner, LineSpan block_scope) {
    if (is(i, "for") && is(i + 1, "(")) {
      auto close = partner_[i + 1];
      auto end = statement_end(i);
      LineSpan scope{t_[i].line, t_[end].end_line};
      local_declaration(i + 2, close, owner, scope, true);
      return;
    }
    if (is(i, "try") && is(i + 1, "(")) {
      auto close = partner_[i + 1];
      auto end = statement_end(i);
      LineSpan scope{t_[i].line, t_[end].end_line};
      std::size_t start = i + 2;
      for (std::size_t k = start; k <= close; ++k) {
        if (is(k, "(") || is(k, "[") || is(k, "{")) {
          k = partner_[k];
          continue;
        }
        if (is(k, ";") || k == close) {
          local_declaration(start, k, owner, scope, false);
          start = k + 1;
        }
      }
      return;
    }
    if (is(i, "catch") && is(i + 1, "(")) {
      auto close = partner_[i + 1];
      if (!is(close + 1, "{")) return;
      LineSpan scope{t_[close + 1].line, t_[partner_[close + 1]].end_line};
      std::size_t k = i + 2;
      std::vector<std::string> mods;
      while (is(k, "final") || is(k, "@")) {
        if (is(k, "final")) {
          mods.emplace_back("final");
          ++k;
        } else {
          k = skip_annotation(k);
        }
      }
      if (close == 0 || !ident(close - 1) || close - 1 <= k) return;
      VariableDecl v;
      v.name = std::string(t_[close - 1].text);
      v.type = join_tokens(k, close - 1);
      v.modifiers = std::move(mods);
      v.kind = VariableKind::kLocal;
      v.owner = owner;
      v.line = t_[close - 1].line;
      v.scope = scope;
      f_.variables.push_back(std::move(v));
      return;
    }
    LineSpan scope{t_[i].line, block_scope.end};
    local_declaration(i, limit, owner, scope, false);
  }

  void local_declaration(std::size_t i, std::size_t limit, const std::string& owner, LineSpan scope,
                         bool allow_colon) {
    std::vector<std::string> mods;
    while (i < limit) {
      if (is(i, "final")) {
        mods.emplace_back("final");
        ++i;
        continue;
      }
      if (is(i, "@")) {
        i = skip_annotation(i);
        continue;
      }
      break;
    }
    if (i >= limit || (keyword(i) && !primitive_types().count(t_[i].text))) return;
    std::string type;
    auto after = parse_type(i, limit, type);
    if (after == npos || !ident(after) || type == "yield") return;
    // `a = b;`-style statements never get here: parse_type would have consumed
    // `a` and then required a name.
    auto next = after + 1;
    while (is(next, "[") && is(next + 1, "]")) next += 2;
    if (!(is(next, "=") || is(next, ";") || is(next, ",") || (allow_colon && is(next, ":")) || next == limit)) return;
    scope.begin = t_[after].line;
    parse_declarators(after, limit, type, mods, VariableKind::kLocal, owner, scope, allow_colon);
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  SourceFile& f_;
  const std::vector<Token>& t_;
  std::size_t n_;
  std::vector<std::size_t> partner_;
};

}  // namespace

std::string_view variable_kind_name(VariableKind kind) {
  switch (kind) {
    case VariableKind::kField: return "field";
    case VariableKind::kLocal: return "local";
    case VariableKind::kParameter: return "parameter";
  }
  return "?";
}

std::vector<Token> lex_java(std::string_view src) {
  std::vector<Token> out;
  const std::size_t n = src.size();
  std::size_t i = 0;
  int line = 1;
  auto push = [&](TokenKind kind, std::size_t begin, std::size_t end, int first_line) {
    out.push_back({kind, src.substr(begin, end - begin), first_line, line, begin, end});
  };
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(src[i]);
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      int start_line = line;
      i += 2;
      while (i + 1 < n && !(src[i] == '*' && src[i + 1] == '/')) {
        if (src[i] == '\n') ++line;
        ++i;
      }
      if (i + 1 >= n) parse_error(start_line, "unterminated comment");
      i += 2;
      continue;
    }
    if (c == '"') {
      std::size_t begin = i;
      int start_line = line;
      if (src.substr(i, 3) == "\"\"\"") {
        i += 3;
        while (i < n && src.substr(i, 3) != "\"\"\"") {
          if (src[i] == '\\') ++i;
          if (i < n && src[i] == '\n') ++line;
          ++i;
        }
        if (i >= n) parse_error(start_line, "unterminated text block");
        i += 3;
      } else {
        ++i;
        while (i < n && src[i] != '"') {
          if (src[i] == '\n') parse_error(start_line, "unterminated string literal");
          if (src[i] == '\\') ++i;
          ++i;
        }
        if (i >= n) parse_error(start_line, "unterminated string literal");
        ++i;
      }
      push(TokenKind::kString, begin, i, start_line);
      continue;
    }
    if (c == '\'') {
      std::size_t begin = i;
      ++i;
      while (i < n && src[i] != '\'') {
        if (src[i] == '\n') parse_error(line, "unterminated char literal");
        if (src[i] == '\\') ++i;
        ++i;
      }
      if (i >= n) parse_error(line, "unterminated char literal");
      ++i;
      push(TokenKind::kChar, begin, i, line);
      continue;
    }
    if ((c >= '0' && c <= '9') || (c == '.' && i + 1 < n && src[i + 1] >= '0' && src[i + 1] <= '9')) {
      std::size_t begin = i;
      while (i < n) {
        char d = src[i];
        if ((d == '+' || d == '-') && (src[i - 1] == 'e' || src[i - 1] == 'E' || src[i - 1] == 'p' ||
                                       src[i - 1] == 'P') &&
            !(src[begin] == '0' && begin + 1 < n && (src[begin + 1] == 'x' || src[begin + 1] == 'X') &&
              (src[i - 1] == 'e' || src[i - 1] == 'E'))) {
          ++i;
          continue;
        }
        if (is_ident_char(static_cast<unsigned char>(d)) || d == '.') {
          ++i;
          continue;
        }
        break;
      }
      push(TokenKind::kNumber, begin, i, line);
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t begin = i;
      while (i < n && is_ident_char(static_cast<unsigned char>(src[i]))) ++i;
      auto text = src.substr(begin, i - begin);
      push(keywords().count(text) ? TokenKind::kKeyword : TokenKind::kIdent, begin, i, line);
      continue;
    }
    std::size_t len = 1;
    if (src.substr(i, 3) == "...") {
      len = 3;
    } else if (src.substr(i, 2) == "->" || src.substr(i, 2) == "::") {
      len = 2;
    }
    push(TokenKind::kPunct, i, i + len, line);
    i += len;
  }
  return out;
}

bool JavaFrontend::accepts(std::string_view path) const {
  return path.size() > 5 && path.substr(path.size() - 5) == ".java";
}

SourceFile JavaFrontend::parse(const FileSnapshot& snapshot) const {
  SourceFile f;
  f.path = snapshot.path;
  f.side = snapshot.side;
  f.content = std::make_shared<const std::string>(snapshot.content);
  f.tokens = lex_java(*f.content);
  JavaStructure(f).run();
  return f;
}

// ---------------------------------------------------------------------------

std::string_view SourceFile::text(std::size_t begin_offset, std::size_t end_offset) const {
  return std::string_view(*content).substr(begin_offset, end_offset - begin_offset);
}

int SourceFile::line_count() const {
  if (content->empty()) return 0;
  auto n = static_cast<int>(std::count(content->begin(), content->end(), '\n'));
  return content->back() == '\n' ? n : n + 1;
}

std::vector<std::size_t> SourceFile::tokens_on_line(int line) const {
  auto it = std::lower_bound(tokens.begin(), tokens.end(), line, [](const Token& t, int l) { return t.line < l; });
  std::vector<std::size_t> out;
  for (; it != tokens.end() && it->line == line; ++it) out.push_back(static_cast<std::size_t>(it - tokens.begin()));
  return out;
}

const SourceFile* ProjectIndex::find(std::string_view path, Side side) const {
  for (const auto& f : files_) {
    if (f->path == path && f->side == side) return f.get();
  }
  return nullptr;
}

std::vector<const SourceFile*> ProjectIndex::project_view() const {
  std::vector<const SourceFile*> out;
  for (const auto& f : files_) {
    if (f->side == Side::kPost || find(f->path, Side::kPost) == nullptr) out.push_back(f.get());
  }
  return out;
}

std::vector<MethodRef> ProjectIndex::lookup_methods(std::string_view name, int arity) const {
  std::vector<MethodRef> out;
  for (const auto* f : project_view()) {
    for (const auto& m : f->methods) {
      if (m.name != name || m.constructor) continue;
      bool ok = m.arity == arity || (m.varargs && arity >= m.arity - 1);
      if (ok) out.push_back({f, &m});
    }
  }
  return out;
}

const TypeDecl* ProjectIndex::lookup_type(std::string_view simple_name, const SourceFile** file_out) const {
  for (const auto* f : project_view()) {
    for (const auto& t : f->types) {
      if (t.name == simple_name) {
        if (file_out != nullptr) *file_out = f;
        return &t;
      }
    }
  }
  return nullptr;
}

std::size_t ProjectIndex::declaration_count() const {
  std::size_t n = 0;
  for (const auto& f : files_) n += f->types.size() + f->methods.size() + f->variables.size();
  return n;
}

ProjectIndex build_project_index(const std::vector<FileSnapshot>& snapshots,
                                 const std::vector<std::shared_ptr<const LanguageFrontend>>& frontends) {
  std::vector<std::shared_ptr<const LanguageFrontend>> fe = frontends;
  if (fe.empty()) fe.push_back(std::make_shared<JavaFrontend>());
  ProjectIndex index;
  for (const auto& snap : snapshots) {
    const LanguageFrontend* chosen = nullptr;
    for (const auto& f : fe) {
      if (f->accepts(snap.path)) {
        chosen = f.get();
        break;
      }
    }
    if (chosen == nullptr) continue;
    if (index.find(snap.path, snap.side) != nullptr) continue;
    try {
      index.add(std::make_unique<SourceFile>(chosen->parse(snap)));
    } catch (const std::exception& e) {
      log::warn("context_extraction", "skipping " + snap.path + " (" + std::string(side_name(snap.side)) +
                                          "): " + e.what());
      index.skip({snap.path, snap.side, e.what()});
    }
  }
  return index;
}

}  // namespace cmo
