#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace meltlite {

/// Interned, case-insensitive symbol. Two spellings that differ only in
/// letter case share one id.
class SymbolId {
public:
  constexpr SymbolId() = default;

  static SymbolId intern(std::string_view spelling);

  /// Canonical (lower-case) name.
  const std::string &name() const;

  constexpr std::uint32_t index() const { return index_; }
  constexpr bool valid() const { return index_ != 0; }

  friend constexpr bool operator==(SymbolId, SymbolId) = default;
  friend constexpr auto operator<=>(SymbolId a, SymbolId b) {
    return a.index_ <=> b.index_;
  }

private:
  constexpr explicit SymbolId(std::uint32_t i) : index_(i) {}
  std::uint32_t index_ = 0;
};

/// Lower-cases ASCII letters; the interning key.
std::string fold_case(std::string_view spelling);

/// True when `c` may appear inside a symbol.
bool is_symbol_char(char c);
/// True when `c` may start a symbol.
bool is_symbol_start(char c);

} // namespace meltlite

template <> struct std::hash<meltlite::SymbolId> {
  std::size_t operator()(meltlite::SymbolId s) const noexcept {
    return std::hash<std::uint32_t>{}(s.index());
  }
};
