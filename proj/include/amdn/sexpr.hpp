#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "amdn/errors.hpp"

namespace amdn::sexpr {

// A parsed S-expression. Atoms are lower-cased on read: every symbol in the
// supported PDDL subset and trace format is case-insensitive.
struct Node {
  bool is_list = false;
  std::string atom;
  std::vector<Node> items;
  std::size_t line = 0;
  std::size_t column = 0;

  bool is_atom() const { return !is_list; }
  bool is_atom(std::string_view s) const { return !is_list && atom == s; }
  // True for a list whose first item is the atom `head`.
  bool has_head(std::string_view head) const {
    return is_list && !items.empty() && items.front().is_atom(head);
  }
};

[[noreturn]] inline void fail_at(const Node& n, const std::string& what) {
  throw SyntaxError(what, n.line, n.column);
}

inline const Node& expect_list(const Node& n, const char* what) {
  if (!n.is_list) fail_at(n, std::string("expected ") + what + ", found '" + n.atom + "'");
  return n;
}

inline const std::string& expect_atom(const Node& n, const char* what) {
  if (n.is_list) fail_at(n, std::string("expected ") + what + ", found a list");
  return n.atom;
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  // Reads every top-level form until end of input.
  std::vector<Node> read_all() {
    std::vector<Node> forms;
    skip_space();
    while (pos_ < text_.size()) {
      forms.push_back(read_form());
      skip_space();
    }
    return forms;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  Node read_form() {
    Node node;
    node.line = line_;
    node.column = column_;
    char c = text_[pos_];
    if (c == ')') throw SyntaxError("unexpected ')'", line_, column_);
    if (c == '(') {
      node.is_list = true;
      advance();
      for (;;) {
        skip_space();
        if (pos_ >= text_.size())
          throw SyntaxError("expected ')' before end of input (list opened at line " +
                                std::to_string(node.line) + ")",
                            line_, column_);
        if (text_[pos_] == ')') {
          advance();
          break;
        }
        node.items.push_back(read_form());
      }
      return node;
    }
    while (pos_ < text_.size()) {
      char d = text_[pos_];
      if (d == '(' || d == ')' || d == ';' || std::isspace(static_cast<unsigned char>(d))) break;
      node.atom.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(d))));
      advance();
    }
    return node;
  }
};

inline std::vector<Node> read_all(std::string_view text) { return Reader(text).read_all(); }

}  // namespace amdn::sexpr
