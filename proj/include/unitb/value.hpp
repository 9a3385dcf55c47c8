#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "unitb/ast.hpp"

namespace unitb {

// A runtime value over finite sorts. Elements of enumerated sorts are carrier
// indices; bounded-int values are stored as the integer itself. Sets are bit
// masks over the carrier (carrier size <= 64). Maps store one slot per domain
// element: -1 means outside the domain, otherwise the range element index.
struct Value {
  enum class Kind : uint8_t { Bool, Elem, Set, Map };
  Kind kind = Kind::Bool;
  bool b = false;
  long elem = 0;               // Elem: carrier index (enum) or integer (int sort)
  uint64_t mask = 0;           // Set
  std::vector<int16_t> slots;  // Map

  static Value boolean(bool v) { Value x; x.kind = Kind::Bool; x.b = v; return x; }
  static Value element(long v) { Value x; x.kind = Kind::Elem; x.elem = v; return x; }
  static Value set(uint64_t m) { Value x; x.kind = Kind::Set; x.mask = m; return x; }
  static Value map(int dom_size) {
    Value x; x.kind = Kind::Map; x.slots.assign(dom_size, -1); return x;
  }

  bool operator==(const Value& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
      case Kind::Bool: return b == o.b;
      case Kind::Elem: return elem == o.elem;
      case Kind::Set: return mask == o.mask;
      case Kind::Map: return slots == o.slots;
    }
    return false;
  }
  bool operator!=(const Value& o) const { return !(*this == o); }

  size_t hash() const {
    size_t h = (size_t)kind * 0x9e3779b97f4a7c15ull;
    switch (kind) {
      case Kind::Bool: h ^= (size_t)b; break;
      case Kind::Elem: h ^= (size_t)elem * 0xff51afd7ed558ccdull; break;
      case Kind::Set: h ^= (size_t)mask * 0xc4ceb9fe1a85ec53ull; break;
      case Kind::Map:
        for (int16_t s : slots) h = h * 1099511628211ull + (size_t)(s + 1);
        break;
    }
    return h;
  }
};

// Canonical enumeration of a type's value space: `first` yields the least
// value, `next` advances in canonical order and reports overflow. Sets count
// as binary with carrier element 0 the least significant bit; maps count with
// the first domain element least significant and -1 ("absent") the least slot
// value.
Value first_value(const Machine& m, const SemType& t);
bool next_value(const Machine& m, const SemType& t, Value& v);
long value_space_size(const Machine& m, const SemType& t);

// Rendering, e.g. {t1,t2} or {P1 -> 3} or Exit.
std::string show_value(const Machine& m, const SemType& t, const Value& v);

// Elem value <-> integer for int sorts.
inline long int_of_elem(const Sort& s, long stored) { return s.is_int() ? stored : stored; }

struct Valuation {
  std::vector<Value> vals;  // indexed by Machine var order

  bool operator==(const Valuation& o) const { return vals == o.vals; }
  size_t hash() const {
    size_t h = 14695981039346656037ull;
    for (const Value& v : vals) h = h * 31 + v.hash();
    return h;
  }
};

struct ValuationHash {
  size_t operator()(const Valuation& v) const { return v.hash(); }
};

std::string show_valuation(const Machine& m, const Valuation& v);

}  // namespace unitb
