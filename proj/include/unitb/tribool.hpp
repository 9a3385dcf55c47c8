#pragma once

namespace unitb {

// Kleene three-valued truth value; Undef marks ill-definedness.
enum class TriBool : int { False = 0, True = 1, Undef = 2 };

inline TriBool tri_of(bool b) { return b ? TriBool::True : TriBool::False; }

inline TriBool tri_not(TriBool a) {
  if (a == TriBool::Undef) return TriBool::Undef;
  return a == TriBool::True ? TriBool::False : TriBool::True;
}

inline TriBool tri_and(TriBool a, TriBool b) {
  if (a == TriBool::False || b == TriBool::False) return TriBool::False;
  if (a == TriBool::Undef || b == TriBool::Undef) return TriBool::Undef;
  return TriBool::True;
}

inline TriBool tri_or(TriBool a, TriBool b) {
  if (a == TriBool::True || b == TriBool::True) return TriBool::True;
  if (a == TriBool::Undef || b == TriBool::Undef) return TriBool::Undef;
  return TriBool::False;
}

inline TriBool tri_implies(TriBool a, TriBool b) { return tri_or(tri_not(a), b); }

inline const char* tri_name(TriBool t) {
  switch (t) {
    case TriBool::False: return "F";
    case TriBool::True: return "T";
    default: return "undef";
  }
}

}  // namespace unitb
