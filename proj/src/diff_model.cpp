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

#include "cmo/diff_model.hpp"

#include <charconv>
#include <unordered_set>

#include "cmo/error.hpp"

namespace cmo {
namespace {

constexpr std::string_view kModule = "diff_model";

[[noreturn]] void malformed(std::size_t line_no, const std::string& what) {
  throw Error(ErrorCode::kMalformedDiff, std::string(kModule),
              "line " + std::to_string(line_no + 1) + ": " + what);
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

std::vector<std::string_view> split_lines(std::string_view text, bool& final_newline) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(pos));
      final_newline = false;
      return lines;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  final_newline = true;
  return lines;
}

// Git quotes paths containing unusual bytes: "a/f\303\266o\tbar".
std::string unquote_path(std::string_view s) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') return std::string(s);
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    char c = s[i];
    if (c != '\\' || i + 2 >= s.size()) {
      out.push_back(c);
      continue;
    }
    char e = s[++i];
    switch (e) {
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case 'r': out.push_back('\r'); break;
      case 'a': out.push_back('\a'); break;
      case 'b': out.push_back('\b'); break;
      case 'f': out.push_back('\f'); break;
      case 'v': out.push_back('\v'); break;
      case '"': out.push_back('"'); break;
      case '\\': out.push_back('\\'); break;
      default:
        if (e >= '0' && e <= '7' && i + 2 < s.size()) {
          int v = 0;
          for (int k = 0; k < 3 && i < s.size() - 1 && s[i] >= '0' && s[i] <= '7'; ++k, ++i) {
            v = v * 8 + (s[i] - '0');
          }
          --i;
          out.push_back(static_cast<char>(v));
        } else {
          out.push_back(e);
        }
    }
  }
  return out;
}

std::string strip_prefix(std::string path) {
  if (starts_with(path, "a/") || starts_with(path, "b/")) return path.substr(2);
  return path;
}

// Path from a "--- x" / "+++ x" line; nullopt for /dev/null.
std::optional<std::string> marker_path(std::string_view rest) {
  std::string p;
  if (!rest.empty() && rest.front() == '"') {
    auto close = rest.find('"', 1);
    while (close != std::string_view::npos && rest[close - 1] == '\\') close = rest.find('"', close + 1);
    p = unquote_path(rest.substr(0, close == std::string_view::npos ? rest.size() : close + 1));
  } else {
    auto tab = rest.find('\t');
    p = std::string(rest.substr(0, tab));
    while (!p.empty() && (p.back() == '\r' || p.back() == ' ')) p.pop_back();
  }
  if (p == "/dev/null") return std::nullopt;
  return strip_prefix(p);
}

std::pair<std::string, std::string> git_header_paths(std::string_view rest) {
  if (!rest.empty() && rest.front() == '"') {
    auto close = rest.find("\" ");
    auto a = unquote_path(rest.substr(0, close + 1));
    auto b = std::string(rest.substr(close + 2));
    return {strip_prefix(a), strip_prefix(unquote_path(b))};
  }
  // Unquoted: prefer the split where both halves name the same file.
  if (starts_with(rest, "a/") && rest.size() % 2 == 1) {
    auto half = rest.size() / 2;
    auto a = rest.substr(0, half);
    auto b = rest.substr(half + 1);
    if (rest[half] == ' ' && starts_with(b, "b/") && a.substr(2) == b.substr(2)) {
      return {std::string(a.substr(2)), std::string(b.substr(2))};
    }
  }
  auto sep = rest.rfind(" b/");
  if (sep == std::string_view::npos) sep = rest.rfind(' ');
  if (sep == std::string_view::npos) return {strip_prefix(std::string(rest)), strip_prefix(std::string(rest))};
  return {strip_prefix(std::string(rest.substr(0, sep))),
          strip_prefix(unquote_path(rest.substr(sep + 1)))};
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && out >= 0;
}

bool parse_range(std::string_view s, int& start, int& len) {
  auto comma = s.find(',');
  if (comma == std::string_view::npos) {
    len = 1;
    return parse_int(s, start);
  }
  return parse_int(s.substr(0, comma), start) && parse_int(s.substr(comma + 1), len);
}

bool parse_hunk_header(std::string_view line, Hunk& h) {
  if (!starts_with(line, "@@ -")) return false;
  auto end = line.find(" @@", 4);
  if (end == std::string_view::npos) return false;
  auto ranges = line.substr(4, end - 4);
  auto space = ranges.find(" +");
  if (space == std::string_view::npos) return false;
  return parse_range(ranges.substr(0, space), h.old_start, h.old_len) &&
         parse_range(ranges.substr(space + 2), h.new_start, h.new_len);
}

bool is_plain_section_start(const std::vector<std::string_view>& lines, std::size_t i) {
  return starts_with(lines[i], "--- ") && i + 1 < lines.size() && starts_with(lines[i + 1], "+++ ");
}

void interpret_header(FileDiff& f, std::size_t line_no) {
  std::optional<std::string> git_old, git_new, minus, plus, rename_from, rename_to;
  bool saw_minus = false, saw_plus = false, is_new = false, is_deleted = false, is_copy = false;
  for (const auto& raw : f.header_lines) {
    std::string_view l = raw;
    if (starts_with(l, "diff --git ")) {
      auto [a, b] = git_header_paths(l.substr(11));
      git_old = a;
      git_new = b;
    } else if (starts_with(l, "--- ")) {
      saw_minus = true;
      minus = marker_path(l.substr(4));
    } else if (starts_with(l, "+++ ")) {
      saw_plus = true;
      plus = marker_path(l.substr(4));
    } else if (starts_with(l, "rename from ")) {
      rename_from = unquote_path(l.substr(12));
    } else if (starts_with(l, "rename to ")) {
      rename_to = unquote_path(l.substr(10));
    } else if (starts_with(l, "copy from ")) {
      is_copy = true;
    } else if (starts_with(l, "new file mode")) {
      is_new = true;
    } else if (starts_with(l, "deleted file mode")) {
      is_deleted = true;
    } else if (starts_with(l, "Binary files ") || l == "GIT binary patch") {
      f.binary = true;
      if (starts_with(l, "Binary files ") && !saw_minus) {
        auto rest = l.substr(13);
        auto and_pos = rest.find(" and ");
        auto differ = rest.rfind(" differ");
        if (and_pos != std::string_view::npos && differ != std::string_view::npos && differ > and_pos) {
          auto a = rest.substr(0, and_pos);
          auto b = rest.substr(and_pos + 5, differ - and_pos - 5);
          if (a == "/dev/null") is_new = true;
          if (b == "/dev/null") is_deleted = true;
        }
      }
    }
  }
  if (saw_minus && !minus) is_new = true;
  if (saw_plus && !plus) is_deleted = true;
  if (is_new && is_deleted) malformed(line_no, "file section is both added and deleted");

  if (rename_from && rename_to) {
    f.old_path = rename_from;
    f.new_path = rename_to;
  } else {
    f.old_path = saw_minus ? minus : git_old;
    f.new_path = saw_plus ? plus : git_new;
  }
  if (is_new || is_copy) {
    f.change_kind = ChangeKind::kAdded;
    f.old_path.reset();
    if (!f.new_path) f.new_path = git_new;
  } else if (is_deleted) {
    f.change_kind = ChangeKind::kDeleted;
    f.new_path.reset();
    if (!f.old_path) f.old_path = git_old;
  } else if (f.old_path && f.new_path && *f.old_path != *f.new_path) {
    f.change_kind = ChangeKind::kRenamed;
  } else {
    f.change_kind = ChangeKind::kModified;
    if (!f.old_path) f.old_path = f.new_path;
    if (!f.new_path) f.new_path = f.old_path;
  }
  if (!f.old_path && !f.new_path) malformed(line_no, "file section without a path");
  if (f.binary && !f.hunks.empty()) malformed(line_no, "binary file section with text hunks");
}

}  // namespace

int Hunk::count(LineTag tag) const {
  int n = 0;
  for (const auto& l : lines) n += l.tag == tag ? 1 : 0;
  return n;
}

std::string_view change_kind_name(ChangeKind kind) {
  switch (kind) {
    case ChangeKind::kAdded: return "added";
    case ChangeKind::kDeleted: return "deleted";
    case ChangeKind::kModified: return "modified";
    case ChangeKind::kRenamed: return "renamed";
  }
  return "?";
}

const std::string& FileDiff::path() const { return new_path ? *new_path : *old_path; }

int FileDiff::added_lines() const {
  int n = 0;
  for (const auto& h : hunks) n += h.count(LineTag::kAdded);
  return n;
}

int FileDiff::removed_lines() const {
  int n = 0;
  for (const auto& h : hunks) n += h.count(LineTag::kRemoved);
  return n;
}

const FileDiff* CommitDiff::find_file(std::string_view path) const {
  for (const auto& f : files) {
    if ((f.new_path && *f.new_path == path) || (f.old_path && *f.old_path == path)) return &f;
  }
  return nullptr;
}

bool CommitDiff::has_text_hunks() const {
  for (const auto& f : files) {
    if (!f.hunks.empty()) return true;
  }
  return false;
}

CommitDiff parse_unified_diff(std::string_view text) {
  CommitDiff diff;
  diff.raw_text = std::string(text);
  auto lines = split_lines(text, diff.final_newline);

  enum class State { kPreamble, kHeader, kBetween };
  State state = State::kPreamble;
  std::vector<std::string> pending;
  std::size_t section_line = 0;
  bool plain_section = false;

  auto finish_section = [&]() {
    if (!diff.files.empty()) interpret_header(diff.files.back(), section_line);
  };
  auto start_section = [&](std::size_t i, bool plain) {
    finish_section();
    diff.files.emplace_back();
    diff.files.back().header_lines = std::move(pending);
    pending.clear();
    section_line = i;
    plain_section = plain;
    state = State::kHeader;
  };

  std::size_t i = 0;
  while (i < lines.size()) {
    std::string_view line = lines[i];
    bool git_start = starts_with(line, "diff --git ");
    bool plain_start = !git_start && state != State::kHeader && is_plain_section_start(lines, i);

    if (git_start || plain_start) {
      if (state == State::kPreamble) {
        for (auto& p : pending) diff.preamble.push_back(std::move(p));
        pending.clear();
      }
      start_section(i, plain_start);
      diff.files.back().header_lines.emplace_back(line);
      if (plain_start) {
        diff.files.back().header_lines.emplace_back(lines[i + 1]);
        ++i;
      }
      ++i;
      continue;
    }

    if (state == State::kPreamble) {
      pending.emplace_back(line);
      ++i;
      continue;
    }

    if (starts_with(line, "@@ ")) {
      Hunk h;
      if (!parse_hunk_header(line, h)) malformed(i, "bad hunk header '" + std::string(line) + "'");
      if (!pending.empty()) malformed(i, "unexpected lines before hunk");
      h.header = std::string(line);
      ++i;
      int old_seen = 0, new_seen = 0;
      while (old_seen < h.old_len || new_seen < h.new_len) {
        if (i >= lines.size()) malformed(i, "hunk body ends early: " + h.header);
        std::string_view body = lines[i];
        DiffLine dl;
        if (body.empty()) {
          dl.bare = true;
        } else if (body[0] == ' ' || body[0] == '+' || body[0] == '-') {
          dl.tag = static_cast<LineTag>(body[0]);
          dl.text = std::string(body.substr(1));
        } else if (body[0] == '\\' && !h.lines.empty()) {
          h.lines.back().eof_marker = std::string(body);
          ++i;
          continue;
        } else {
          malformed(i, "hunk body ends early: " + h.header);
        }
        if (dl.tag != LineTag::kAdded) ++old_seen;
        if (dl.tag != LineTag::kRemoved) ++new_seen;
        if (old_seen > h.old_len || new_seen > h.new_len) {
          malformed(i, "hunk body does not match header " + h.header);
        }
        h.lines.push_back(std::move(dl));
        ++i;
      }
      while (i < lines.size() && starts_with(lines[i], "\\") && !h.lines.empty()) {
        h.lines.back().eof_marker = std::string(lines[i]);
        ++i;
      }
      diff.files.back().hunks.push_back(std::move(h));
      state = State::kBetween;
      continue;
    }

    if (state == State::kHeader) {
      if (plain_section) {
        // A plain section header is just the ---/+++ pair.
        state = State::kBetween;
        continue;
      }
      diff.files.back().header_lines.emplace_back(line);
      ++i;
      continue;
    }

    // Between hunks: extra body lines mean the header undercounted.
    if (!line.empty() && (line[0] == '+' || line[0] == '-' || line[0] == ' ')) {
      malformed(i, "hunk body longer than its header");
    }
    pending.emplace_back(line);
    ++i;
  }
  finish_section();

  if (diff.files.empty()) {
    throw Error(ErrorCode::kEmptyDiff, std::string(kModule), "no file sections in diff");
  }
  diff.trailer = std::move(pending);

  std::unordered_set<std::string> seen;
  for (const auto& f : diff.files) {
    if (!seen.insert(f.path()).second) {
      throw Error(ErrorCode::kMalformedDiff, std::string(kModule), "duplicate file section for " + f.path());
    }
  }
  return diff;
}

std::string render_unified_diff(const CommitDiff& diff) {
  std::vector<std::string_view> out;
  for (const auto& l : diff.preamble) out.push_back(l);
  std::vector<std::string> bodies;
  std::size_t reserve = 0;
  for (const auto& f : diff.files) {
    for (const auto& h : f.hunks) reserve += h.lines.size();
  }
  bodies.reserve(reserve);
  for (const auto& f : diff.files) {
    for (const auto& l : f.header_lines) out.push_back(l);
    for (const auto& h : f.hunks) {
      out.push_back(h.header);
      for (const auto& l : h.lines) {
        if (l.bare) {
          bodies.emplace_back();
        } else {
          bodies.push_back(static_cast<char>(l.tag) + l.text);
        }
        out.push_back(bodies.back());
        if (l.eof_marker) out.push_back(*l.eof_marker);
      }
    }
  }
  for (const auto& l : diff.trailer) out.push_back(l);

  std::string text;
  for (std::size_t i = 0; i < out.size(); ++i) {
    text.append(out[i]);
    if (i + 1 < out.size() || diff.final_newline) text.push_back('\n');
  }
  return text;
}

bool is_valid_commit_id(std::string_view id) {
  if (id.size() < 7 || id.size() > 40) return false;
  for (char c : id) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

std::map<std::string, ChangedLines> changed_line_map(const CommitDiff& diff) {
  std::map<std::string, ChangedLines> out;
  for (const auto& f : diff.files) {
    auto& entry = out[f.path()];
    for (const auto& h : f.hunks) {
      int old_line = h.old_start;
      int new_line = h.new_start;
      for (const auto& l : h.lines) {
        switch (l.tag) {
          case LineTag::kContext:
            ++old_line;
            ++new_line;
            break;
          case LineTag::kAdded:
            entry.post.insert(new_line++);
            break;
          case LineTag::kRemoved:
            entry.pre.insert(old_line++);
            break;
        }
      }
    }
  }
  return out;
}

Digest256 diff_fingerprint(const CommitDiff& diff) { return Digest256::of(diff.raw_text); }

}  // namespace cmo
