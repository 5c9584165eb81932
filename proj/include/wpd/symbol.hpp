#pragma once

#include <string>
#include <utility>
#include <vector>

namespace wpd {

enum class SymbolKind { independent, dependent, parameter, opaque_function, commutator };

const char* to_string(SymbolKind kind);

/// Named atom. Identity is the name; two symbols with the same name are the
/// same symbol. Class 0 commutes with everything; symbols sharing a nonzero
/// class keep their relative order in products.
struct Symbol {
  std::string name;
  SymbolKind kind = SymbolKind::parameter;
  int commutativity_class = 0;
  /// Declared argument names, opaque functions only.
  std::vector<std::string> params;

  Symbol() = default;
  Symbol(std::string n, SymbolKind k, int cls = 0, std::vector<std::string> ps = {})
      : name(std::move(n)), kind(k), commutativity_class(cls), params(std::move(ps)) {}

  bool central() const { return commutativity_class == 0; }

  friend bool operator==(const Symbol& a, const Symbol& b) { return a.name == b.name; }
  friend bool operator<(const Symbol& a, const Symbol& b) { return a.name < b.name; }
};

/// Unordered multiset of (variable, order) pairs, stored sorted by variable.
using MultiIndex = std::vector<std::pair<std::string, int>>;

MultiIndex add_to_index(MultiIndex index, const std::string& var, int order = 1);
int total_order(const MultiIndex& index);

}  // namespace wpd
