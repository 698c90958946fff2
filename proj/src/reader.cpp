#include "meltlite/reader.hpp"

#include <cerrno>
#include <charconv>
#include <fstream>
#include <sstream>

namespace meltlite {

namespace {

bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

bool is_delimiter(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '(' || c == ')' ||
         c == '"' || c == ';';
}

class Reader {
public:
  Reader(std::string_view src, const std::string &origin)
      : src_(src), file_(std::make_shared<const std::string>(origin)) {}

  std::vector<SExpr> read_all() {
    std::vector<SExpr> out;
    for (;;) {
      skip_blanks();
      if (at_end())
        return out;
      if (peek() == ')')
        fail(here(), "unbalanced closing parenthesis");
      out.push_back(read_expr());
    }
  }

private:
  std::string_view src_;
  std::shared_ptr<const std::string> file_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;

  bool at_end() const { return pos_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }
  Location here() const { return Location{file_, line_, col_}; }

  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  [[noreturn]] void fail(const Location &at, const std::string &msg) const {
    throw CompileError(Phase::read, at, msg);
  }

  void skip_blanks() {
    while (!at_end()) {
      char c = peek();
      if (c == ';') {
        while (!at_end() && peek() != '\n')
          advance();
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f') {
        advance();
      } else {
        return;
      }
    }
  }

  SExpr wrap(const Location &at, const char *head, SExpr inner) {
    sx::List l;
    l.items.push_back(SExpr{at, sx::Symbol{SymbolId::intern(head)}});
    l.items.push_back(std::move(inner));
    return SExpr{at, std::move(l)};
  }

  SExpr read_expr() {
    skip_blanks();
    Location at = here();
    if (at_end())
      fail(at, "unexpected end of input");
    char c = peek();
    switch (c) {
    case '(':
      return read_list();
    case ')':
      fail(at, "unbalanced closing parenthesis");
    case '\'':
      advance();
      return wrap(at, "quote", read_sugar_operand(at, "'"));
    case '`':
      advance();
      return wrap(at, "backquote", read_sugar_operand(at, "`"));
    case ',':
      advance();
      return wrap(at, "comma", read_sugar_operand(at, ","));
    case '?':
      advance();
      return wrap(at, "question", read_sugar_operand(at, "?"));
    case '"':
      return read_string();
    case '#':
      if (peek(1) == '{')
        return read_macrostring_literal();
      fail(at, "unexpected '#' (macro-strings start with #{)");
    case ':':
      return read_keyword();
    default:
      return read_atom();
    }
  }

  SExpr read_sugar_operand(const Location &at, const char *what) {
    skip_blanks();
    if (at_end() || peek() == ')')
      fail(at, std::string("missing expression after ") + what);
    return read_expr();
  }

  SExpr read_list() {
    Location at = here();
    advance(); // (
    sx::List l;
    for (;;) {
      skip_blanks();
      if (at_end())
        fail(at, "unterminated list");
      if (peek() == ')') {
        advance();
        return SExpr{at, std::move(l)};
      }
      l.items.push_back(read_expr());
    }
  }

  SExpr read_string() {
    Location at = here();
    advance(); // "
    std::string out;
    for (;;) {
      if (at_end())
        fail(at, "unterminated string");
      Location cat = here();
      char c = advance();
      if (c == '"')
        return SExpr{at, sx::String{std::move(out)}};
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (at_end())
        fail(at, "unterminated string");
      char e = advance();
      switch (e) {
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case 'r': out.push_back('\r'); break;
      case 'a': out.push_back('\a'); break;
      case 'f': out.push_back('\f'); break;
      case 'v': out.push_back('\v'); break;
      case '0': out.push_back('\0'); break;
      case '\\': out.push_back('\\'); break;
      case '"': out.push_back('"'); break;
      case '\'': out.push_back('\''); break;
      case '\n': break; // line continuation
      default:
        fail(cat, std::string("unknown string escape \\") + e);
      }
    }
  }

  SExpr read_macrostring_literal() {
    Location at = here();
    advance(); // #
    advance(); // {
    Location body_at = here();
    std::size_t start = pos_;
    for (;;) {
      if (at_end())
        fail(at, "unterminated macro-string");
      if (peek() == '}' && peek(1) == '#') {
        std::string_view raw = src_.substr(start, pos_ - start);
        advance();
        advance();
        MacroString ms = read_macrostring(raw, body_at);
        ms.location = at;
        return SExpr{at, std::move(ms)};
      }
      advance();
    }
  }

  std::string_view scan_token() {
    std::size_t start = pos_;
    while (!at_end() && !is_delimiter(peek()))
      advance();
    return src_.substr(start, pos_ - start);
  }

  SExpr read_keyword() {
    Location at = here();
    advance(); // :
    std::string_view tok = scan_token();
    if (tok.empty())
      fail(at, "empty keyword");
    for (char c : tok)
      if (!is_symbol_char(c))
        fail(at, "invalid character in keyword :" + std::string(tok));
    return SExpr{at, sx::Keyword{SymbolId::intern(tok)}};
  }

  SExpr read_atom() {
    Location at = here();
    std::string_view tok = scan_token();
    if (tok.empty())
      fail(at, std::string("unexpected character '") + peek() + "'");
    bool numeric = (tok[0] >= '0' && tok[0] <= '9') ||
                   ((tok[0] == '-' || tok[0] == '+') && tok.size() > 1 && tok[1] >= '0' &&
                    tok[1] <= '9');
    if (numeric) {
      std::string_view digits = tok[0] == '+' ? tok.substr(1) : tok;
      std::int64_t value = 0;
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
      if (ec == std::errc::result_out_of_range)
        fail(at, "integer literal out of 64-bit range: " + std::string(tok));
      if (ec != std::errc() || ptr != digits.data() + digits.size())
        fail(at, "malformed number " + std::string(tok));
      return SExpr{at, sx::Long{value}};
    }
    for (char c : tok)
      if (!is_symbol_char(c))
        fail(at, std::string("invalid character '") + c + "' in symbol " + std::string(tok));
    return SExpr{at, sx::Symbol{SymbolId::intern(tok)}};
  }
};

} // namespace

std::vector<SExpr> read_unit(std::string_view source, const std::string &origin) {
  return Reader(source, origin).read_all();
}

MacroString read_macrostring(std::string_view raw, const Location &at) {
  MacroString ms;
  ms.location = at;
  Location cur = at;
  auto step = [&](char c) {
    if (c == '\n') {
      ++cur.line;
      cur.column = 1;
    } else {
      ++cur.column;
    }
  };
  auto push_text = [&](std::string_view t) {
    if (t.empty())
      return;
    if (!ms.chunks.empty() && ms.chunks.back().is_text())
      std::get<MacroChunk::Text>(ms.chunks.back().part).text.append(t);
    else
      ms.chunks.push_back(MacroChunk{MacroChunk::Text{std::string(t)}});
  };

  std::size_t i = 0;
  while (i < raw.size()) {
    char c = raw[i];
    if (c != '$') {
      push_text(raw.substr(i, 1));
      step(c);
      ++i;
      continue;
    }
    Location dollar = cur;
    char next = i + 1 < raw.size() ? raw[i + 1] : '\0';
    if (next == '$') {
      push_text("$");
      step('$');
      step('$');
      i += 2;
      continue;
    }
    if (!is_ident_start(next))
      throw CompileError(Phase::read, dollar,
                         next == '_' ? "'$_' is not a valid macro-string reference"
                                     : "'$' must be followed by a symbol name (use $$ for a literal $)");
    std::size_t j = i + 1;
    while (j < raw.size() && is_ident_char(raw[j]))
      ++j;
    std::string_view name = raw.substr(i + 1, j - i - 1);
    ms.chunks.push_back(MacroChunk{MacroChunk::Ref{SymbolId::intern(name), std::string(name)}});
    for (std::size_t k = i; k < j; ++k)
      step(raw[k]);
    if (j < raw.size() && raw[j] == '#') {
      step('#');
      ++j;
    }
    i = j;
  }
  return ms;
}

std::vector<SExpr> read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw CompileError(Phase::read, Location{std::make_shared<const std::string>(path), 1, 1},
                       "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return read_unit(ss.str(), path);
}

} // namespace meltlite
