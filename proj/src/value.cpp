#include "unitb/value.hpp"

#include <sstream>
#include <stdexcept>

namespace unitb {

static long elem_count(const Machine& m, SortId s) { return m.sorts[s].size(); }

Value first_value(const Machine& m, const SemType& t) {
  switch (t.kind) {
    case SemType::Kind::Bool: return Value::boolean(false);
    case SemType::Kind::Elem: {
      const Sort& s = m.sorts[t.sort];
      return Value::element(s.is_int() ? s.lo : 0);
    }
    case SemType::Kind::Set: return Value::set(0);
    case SemType::Kind::Map: {
      Value v = Value::map((int)elem_count(m, t.sort));
      if (t.total) std::fill(v.slots.begin(), v.slots.end(), 0);
      return v;
    }
    default: throw std::logic_error("first_value: untyped");
  }
}

bool next_value(const Machine& m, const SemType& t, Value& v) {
  switch (t.kind) {
    case SemType::Kind::Bool:
      if (!v.b) { v.b = true; return true; }
      return false;
    case SemType::Kind::Elem: {
      const Sort& s = m.sorts[t.sort];
      long hi = s.is_int() ? s.hi : (long)s.elems.size() - 1;
      if (v.elem < hi) { ++v.elem; return true; }
      return false;
    }
    case SemType::Kind::Set: {
      uint64_t full = elem_count(m, t.sort) >= 64 ? ~0ull
                                                  : ((1ull << elem_count(m, t.sort)) - 1);
      if (v.mask < full) { ++v.mask; return true; }
      return false;
    }
    case SemType::Kind::Map: {
      int range = (int)elem_count(m, t.sort2);
      int16_t least = t.total ? 0 : -1;
      for (auto& slot : v.slots) {
        if (slot < range - 1) { ++slot; return true; }
        slot = least;
      }
      return false;
    }
    default: return false;
  }
}

long value_space_size(const Machine& m, const SemType& t) {
  switch (t.kind) {
    case SemType::Kind::Bool: return 2;
    case SemType::Kind::Elem: return elem_count(m, t.sort);
    case SemType::Kind::Set: {
      long n = elem_count(m, t.sort);
      if (n >= 62) return -1;
      return 1l << n;
    }
    case SemType::Kind::Map: {
      long base = elem_count(m, t.sort2) + (t.total ? 0 : 1);
      long out = 1;
      for (long i = 0; i < elem_count(m, t.sort); ++i) {
        if (out > 1000000000l / base) return -1;
        out *= base;
      }
      return out;
    }
    default: return 0;
  }
}

static std::string show_elem(const Sort& s, long stored) {
  if (s.is_int()) return std::to_string(stored);
  return s.elems[(size_t)stored];
}

std::string show_value(const Machine& m, const SemType& t, const Value& v) {
  std::ostringstream os;
  switch (t.kind) {
    case SemType::Kind::Bool: return v.b ? "true" : "false";
    case SemType::Kind::Elem: return show_elem(m.sorts[t.sort], v.elem);
    case SemType::Kind::Set: {
      const Sort& s = m.sorts[t.sort];
      os << "{";
      bool first = true;
      for (int i = 0; i < s.size(); ++i)
        if (v.mask & (1ull << i)) {
          if (!first) os << ",";
          first = false;
          os << show_elem(s, s.is_int() ? s.lo + i : i);
        }
      os << "}";
      return os.str();
    }
    case SemType::Kind::Map: {
      const Sort& d = m.sorts[t.sort];
      const Sort& r = m.sorts[t.sort2];
      os << "{";
      bool first = true;
      for (size_t i = 0; i < v.slots.size(); ++i)
        if (v.slots[i] >= 0) {
          if (!first) os << ",";
          first = false;
          os << show_elem(d, d.is_int() ? d.lo + (long)i : (long)i) << " -> "
             << show_elem(r, r.is_int() ? r.lo + v.slots[i] : v.slots[i]);
        }
      os << "}";
      return os.str();
    }
    default: return "?";
  }
}

std::string show_valuation(const Machine& m, const Valuation& v) {
  std::ostringstream os;
  os << "{";
  for (size_t i = 0; i < m.vars.size(); ++i) {
    if (i) os << ", ";
    os << m.vars[i].name << "=" << show_value(m, m.vars[i].type, v.vals[i]);
  }
  os << "}";
  return os.str();
}

}  // namespace unitb
