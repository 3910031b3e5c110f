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

#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cmo/git_repo.hpp"

namespace cmo {

// Inclusive 1-based line range.
struct LineSpan {
  int begin = 0;
  int end = 0;

  bool contains(int line) const { return line >= begin && line <= end; }
  bool contains(const LineSpan& o) const { return o.begin >= begin && o.end <= end; }
  int size() const { return end - begin + 1; }
  friend bool operator==(const LineSpan&, const LineSpan&) = default;
};

enum class TokenKind { kIdent, kKeyword, kNumber, kString, kChar, kPunct };

struct Token {
  TokenKind kind = TokenKind::kPunct;
  std::string_view text;
  int line = 0;      // line of the first character
  int end_line = 0;  // line of the last character
  std::size_t begin = 0;
  std::size_t end = 0;  // byte offsets, half-open

  bool is(std::string_view t) const { return text == t && kind != TokenKind::kString && kind != TokenKind::kChar; }
};

// A region of source delimited by a brace pair, together with the statement
// or declaration that owns it.
enum class BlockRole {
  kTypeBody,       // class/interface/enum/record body
  kAnonymousBody,  // anonymous class body (part of an expression)
  kMethodBody,
  kStatement,      // if/for/try/while/switch/synchronized/plain block, ...
  kLambda,
  kInitializer,    // array initializer, not a code block
};

struct Block {
  BlockRole role = BlockRole::kStatement;
  std::size_t open = 0;   // token index of '{'
  std::size_t close = 0;  // token index of '}'
  // Token range of the owning statement, inclusive.
  std::size_t stmt_begin = 0;
  std::size_t stmt_end = 0;
  LineSpan span;  // lines of [stmt_begin, stmt_end]
  int parent = -1;
};

struct TypeDecl {
  std::string name;
  std::string qualified_name;  // Outer.Inner
  std::string kind;            // class, interface, enum, record, @interface
  std::string extends;
  LineSpan span;
  std::size_t begin_offset = 0;
  std::size_t end_offset = 0;
  int block = -1;
};

struct MethodDecl {
  std::string name;
  std::string owner;  // qualified name of the declaring type
  int arity = 0;
  bool varargs = false;
  bool constructor = false;
  bool has_body = true;
  std::string signature;  // normalized header text
  int name_line = 0;
  LineSpan span;       // whole declaration
  LineSpan body_span;  // braces only; zero when abstract
  std::size_t begin_offset = 0;
  std::size_t end_offset = 0;
  int block = -1;

  std::string display_name() const { return owner.empty() ? name : owner + "." + name; }
};

enum class VariableKind { kField, kLocal, kParameter };

std::string_view variable_kind_name(VariableKind kind);

struct VariableDecl {
  std::string name;
  std::string type;
  std::vector<std::string> modifiers;
  VariableKind kind = VariableKind::kLocal;
  std::string owner;  // declaring type
  int line = 0;
  LineSpan scope;  // where the name is visible (fields: the type body)
};

struct SourceFile {
  std::string path;
  Side side = Side::kPost;
  std::shared_ptr<const std::string> content;
  std::vector<Token> tokens;
  std::vector<Block> blocks;  // ordered by opening token
  std::vector<TypeDecl> types;
  std::vector<MethodDecl> methods;
  std::vector<VariableDecl> variables;

  std::string_view text(std::size_t begin_offset, std::size_t end_offset) const;
  int line_count() const;
  // Tokens whose first line is `line`.
  std::vector<std::size_t> tokens_on_line(int line) const;
};

// Turns one snapshot into a SourceFile. New languages plug in here.
class LanguageFrontend {
 public:
  virtual ~LanguageFrontend() = default;
  virtual std::string name() const = 0;
  virtual bool accepts(std::string_view path) const = 0;
  // Throws std::runtime_error when the file cannot be parsed.
  virtual SourceFile parse(const FileSnapshot& snapshot) const = 0;
};

struct ParseSkipped {
  std::string path;
  Side side = Side::kPost;
  std::string reason;
};

struct MethodRef {
  const SourceFile* file = nullptr;
  const MethodDecl* method = nullptr;
};

class ProjectIndex {
 public:
  ProjectIndex() = default;
  ProjectIndex(const ProjectIndex&) = delete;
  ProjectIndex& operator=(const ProjectIndex&) = delete;
  ProjectIndex(ProjectIndex&&) = default;
  ProjectIndex& operator=(ProjectIndex&&) = default;

  const std::vector<std::unique_ptr<SourceFile>>& files() const { return files_; }
  const std::vector<ParseSkipped>& skipped() const { return skipped_; }

  const SourceFile* find(std::string_view path, Side side) const;
  // The project as seen after the commit: post images, plus pre images of
  // files that no longer exist.
  std::vector<const SourceFile*> project_view() const;

  // All declarations named `name` accepting `arity` arguments.
  std::vector<MethodRef> lookup_methods(std::string_view name, int arity) const;
  const TypeDecl* lookup_type(std::string_view simple_name, const SourceFile** file_out = nullptr) const;

  std::size_t declaration_count() const;

  void add(std::unique_ptr<SourceFile> file) { files_.push_back(std::move(file)); }
  void skip(ParseSkipped s) { skipped_.push_back(std::move(s)); }

 private:
  std::vector<std::unique_ptr<SourceFile>> files_;
  std::vector<ParseSkipped> skipped_;
};

class JavaFrontend : public LanguageFrontend {
 public:
  std::string name() const override { return "java"; }
  bool accepts(std::string_view path) const override;
  SourceFile parse(const FileSnapshot& snapshot) const override;
};

std::vector<Token> lex_java(std::string_view src);

// Files no frontend accepts are ignored; parse failures are recorded in
// ProjectIndex::skipped(), never thrown.
ProjectIndex build_project_index(const std::vector<FileSnapshot>& snapshots,
                                 const std::vector<std::shared_ptr<const LanguageFrontend>>& frontends = {});

}  // namespace cmo
