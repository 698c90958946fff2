#include "meltlite/symbol.hpp"

#include <deque>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

namespace meltlite {

namespace {

class Interner {
public:
  Interner() { names_.emplace_back(); } // index 0 is the invalid symbol

  std::uint32_t intern(std::string_view spelling) {
    std::string key = fold_case(spelling);
    {
      std::shared_lock lock(mutex_);
      if (auto it = ids_.find(key); it != ids_.end())
        return it->second;
    }
    std::unique_lock lock(mutex_);
    auto [it, inserted] = ids_.try_emplace(key, static_cast<std::uint32_t>(names_.size()));
    if (inserted)
      names_.push_back(std::move(key));
    return it->second;
  }

  const std::string &name(std::uint32_t index) {
    std::shared_lock lock(mutex_);
    return names_.at(index);
  }

private:
  std::shared_mutex mutex_;
  std::deque<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

Interner &interner() {
  static Interner instance;
  return instance;
}

} // namespace

SymbolId SymbolId::intern(std::string_view spelling) {
  return SymbolId(interner().intern(spelling));
}

const std::string &SymbolId::name() const { return interner().name(index_); }

std::string fold_case(std::string_view spelling) {
  std::string out(spelling);
  for (char &c : out)
    if (c >= 'A' && c <= 'Z')
      c = static_cast<char>(c - 'A' + 'a');
  return out;
}

bool is_symbol_char(char c) {
  if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'))
    return true;
  switch (c) {
  case '_': case '+': case '-': case '*': case '/': case '<': case '>':
  case '=': case '!': case '?': case '%': case '.':
    return true;
  default:
    return false;
  }
}

bool is_symbol_start(char c) { return is_symbol_char(c) && !(c >= '0' && c <= '9'); }

} // namespace meltlite
