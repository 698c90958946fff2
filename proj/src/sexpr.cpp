#include "meltlite/sexpr.hpp"

#include <sstream>

namespace meltlite {

std::string MacroString::source_text() const {
  std::string out;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const MacroChunk &c = chunks[i];
    if (c.is_text()) {
      for (char ch : c.text()) {
        out.push_back(ch);
        if (ch == '$')
          out.push_back('$');
      }
      continue;
    }
    out += '$';
    out += c.ref().spelling;
    // A following identifier character would otherwise extend the name.
    if (i + 1 < chunks.size() && chunks[i + 1].is_text()) {
      char n = chunks[i + 1].text().front();
      if ((n >= 'a' && n <= 'z') || (n >= 'A' && n <= 'Z') || (n >= '0' && n <= '9') ||
          n == '_' || n == '#')
        out += '#';
    } else if (i + 1 < chunks.size()) {
      out += '#';
    }
  }
  return out;
}

namespace {

void print_string(std::ostream &os, const std::string &s) {
  os << '"';
  for (char c : s) {
    switch (c) {
    case '\n': os << "\\n"; break;
    case '\t': os << "\\t"; break;
    case '"': os << "\\\""; break;
    case '\\': os << "\\\\"; break;
    default: os << c;
    }
  }
  os << '"';
}

void print(std::ostream &os, const SExpr &e) {
  std::visit(
      [&](const auto &n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, sx::Symbol>)
          os << n.id.name();
        else if constexpr (std::is_same_v<T, sx::Keyword>)
          os << ':' << n.id.name();
        else if constexpr (std::is_same_v<T, sx::Long>)
          os << n.value;
        else if constexpr (std::is_same_v<T, sx::String>)
          print_string(os, n.value);
        else if constexpr (std::is_same_v<T, MacroString>)
          os << "#{" << n.source_text() << "}#";
        else {
          os << '(';
          for (std::size_t i = 0; i < n.items.size(); ++i) {
            if (i)
              os << ' ';
            print(os, n.items[i]);
          }
          os << ')';
        }
      },
      e.node);
}

} // namespace

std::string to_string(const SExpr &e) {
  std::ostringstream os;
  print(os, e);
  return os.str();
}

} // namespace meltlite
