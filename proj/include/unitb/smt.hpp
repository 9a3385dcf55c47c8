#pragma once

#include <string>

#include "unitb/ast.hpp"
#include "unitb/obligations.hpp"

namespace unitb {

// Solver-neutral SMT-LIB2 script for one obligation: finite sorts become
// declared datatypes (bounded ints become Int with range assertions), sets
// become arrays to Bool, partial functions an array plus a domain mask.
// Three-valued semantics is encoded by a definedness term per subexpression,
// so check-sat is `unsat` exactly when discharge reports valid.
std::string export_smtlib(const ProofObligation& po, const Machine& m);

}  // namespace unitb
