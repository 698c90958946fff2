#pragma once

// Recursive-descent checker for the Graphviz DOT language (no HTML strings,
// no subgraph ports). Returns an empty string on success, else the error.

#include <cctype>
#include <set>
#include <string>
#include <vector>

namespace dotcheck {

struct Summary {
  std::set<std::string> nodes;
  int edges = 0;
};

class Parser {
public:
  explicit Parser(const std::string &text) : s_(text) {}

  std::string run(Summary &out) {
    out_ = &out;
    try {
      skip();
      if (word_is("strict"))
        next_word();
      std::string kind = next_word();
      if (kind != "graph" && kind != "digraph")
        fail("expected graph or digraph");
      directed_ = kind == "digraph";
      skip();
      if (peek() != '{')
        id();
      expect('{');
      stmt_list();
      expect('}');
      skip();
      if (pos_ != s_.size())
        fail("trailing text");
    } catch (const std::string &e) {
      return e;
    }
    return "";
  }

private:
  const std::string &s_;
  std::size_t pos_ = 0;
  bool directed_ = false;
  Summary *out_ = nullptr;

  [[noreturn]] void fail(const std::string &what) {
    throw what + " at offset " + std::to_string(pos_);
  }

  void skip() {
    while (pos_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
      } else if (s_.compare(pos_, 2, "//") == 0 || s_[pos_] == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n')
          ++pos_;
      } else if (s_.compare(pos_, 2, "/*") == 0) {
        std::size_t e = s_.find("*/", pos_ + 2);
        if (e == std::string::npos)
          fail("unterminated comment");
        pos_ = e + 2;
      } else {
        break;
      }
    }
  }

  char peek() {
    skip();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  void expect(char c) {
    if (peek() != c)
      fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           static_cast<unsigned char>(c) >= 0x80;
  }

  bool word_is(const char *w) {
    skip();
    std::size_t n = std::char_traits<char>::length(w);
    return s_.compare(pos_, n, w) == 0 && (pos_ + n == s_.size() || !ident_char(s_[pos_ + n]));
  }

  std::string next_word() {
    skip();
    std::size_t b = pos_;
    while (pos_ < s_.size() && ident_char(s_[pos_]))
      ++pos_;
    return s_.substr(b, pos_ - b);
  }

  std::string id() {
    char c = peek();
    if (c == '"') {
      ++pos_;
      std::string v;
      while (true) {
        if (pos_ >= s_.size())
          fail("unterminated string");
        char d = s_[pos_++];
        if (d == '"')
          break;
        if (d == '\\' && pos_ < s_.size())
          v += s_[pos_++];
        else
          v += d;
      }
      return v;
    }
    if (c == '-' || c == '.' || std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t b = pos_;
      if (s_[pos_] == '-')
        ++pos_;
      bool digits = false;
      while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
        digits = digits || s_[pos_] != '.';
        ++pos_;
      }
      if (!digits)
        fail("malformed numeral");
      return s_.substr(b, pos_ - b);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
        static_cast<unsigned char>(c) >= 0x80)
      return next_word();
    fail("expected an identifier");
  }

  bool at_id() {
    char c = peek();
    return c == '"' || c == '-' || c == '.' || ident_char(c);
  }

  void attr_list() {
    while (peek() == '[') {
      ++pos_;
      while (peek() != ']') {
        id();
        if (peek() == '=') {
          ++pos_;
          id();
        }
        if (peek() == ',' || peek() == ';')
          ++pos_;
      }
      ++pos_;
    }
  }

  bool edge_op() {
    skip();
    if (s_.compare(pos_, 2, "->") == 0) {
      if (!directed_)
        fail("'->' in an undirected graph");
      pos_ += 2;
      return true;
    }
    if (s_.compare(pos_, 2, "--") == 0) {
      if (directed_)
        fail("'--' in a directed graph");
      pos_ += 2;
      return true;
    }
    return false;
  }

  void node_id() {
    out_->nodes.insert(id());
    if (peek() == ':') {
      ++pos_;
      id();
      if (peek() == ':') {
        ++pos_;
        id();
      }
    }
  }

  void stmt_list() {
    while (peek() != '}' && peek() != '\0') {
      stmt();
      if (peek() == ';')
        ++pos_;
    }
  }

  void stmt() {
    if (word_is("graph") || word_is("node") || word_is("edge")) {
      next_word();
      if (peek() != '[')
        fail("expected an attribute list");
      attr_list();
      return;
    }
    if (word_is("subgraph") || peek() == '{') {
      subgraph();
    } else {
      std::size_t save = pos_;
      id();
      if (peek() == '=') {
        ++pos_;
        id();
        return;
      }
      pos_ = save;
      node_id();
    }
    while (edge_op()) {
      ++out_->edges;
      if (word_is("subgraph") || peek() == '{')
        subgraph();
      else
        node_id();
    }
    attr_list();
  }

  void subgraph() {
    if (word_is("subgraph")) {
      next_word();
      if (peek() != '{')
        id();
    }
    expect('{');
    stmt_list();
    expect('}');
  }
};

inline std::string check(const std::string &text, Summary &out) { return Parser(text).run(out); }

inline std::string check(const std::string &text) {
  Summary s;
  return check(text, s);
}

} // namespace dotcheck
