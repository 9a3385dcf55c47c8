#include "unitb/parser.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <cstring>
#include <functional>

namespace unitb {

namespace {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

enum class Tok {
  Ident, Int, String,
  LParen, RParen, LBrace, RBrace, LBracket, RBracket,
  Comma, Semi, Colon, Bar, Prime,
  TightDot,   // application: no whitespace on either side
  LooseDot,   // quantifier separator
  DotDot,
  Assign,     // :=
  ChooseIn,   // :in
  SuchThat,   // :|
  Eq, Neq, Lt, Leq, Gt, Geq,
  Plus, Minus, Backslash,
  Arrow,      // ->  (maplets, depends)
  TotalFn,    // -->
  PartialFn,  // +->
  LeadsTo,    // ~>
  Implies,    // =>
  Eof,
};

struct Token {
  Tok kind;
  std::string text;
  long int_val = 0;
  SourceSpan span;
};

struct Lexer {
  const std::string& src;
  std::string file;
  size_t pos = 0;
  int line = 1, col = 1;
  std::vector<Token> toks;

  explicit Lexer(const std::string& s, std::string f) : src(s), file(std::move(f)) {}

  [[noreturn]] void fail(const std::string& msg, int l, int c) {
    throw ParseError({{{file, l, c, l, c}, msg}});
  }

  void advance(size_t n = 1) {
    for (size_t i = 0; i < n && pos < src.size(); ++i) {
      if (src[pos] == '\n') { ++line; col = 1; } else ++col;
      ++pos;
    }
  }

  bool starts(const char* s) const {
    size_t n = strlen(s);
    return src.compare(pos, n, s) == 0;
  }

  void push(Tok k, const std::string& text, int l, int c) {
    toks.push_back({k, text, 0, {file, l, c, line, col}});
  }

  // Unicode aliases for the math symbols of the source notation.
  bool unicode_alias(int l, int c) {
    struct Alias { const char* sym; Tok tok; const char* text; };
    static const Alias table[] = {
        {"∧", Tok::Ident, "and"}, {"∨", Tok::Ident, "or"},
        {"¬", Tok::Ident, "not"}, {"⇒", Tok::Implies, "=>"},
        {"∈", Tok::Ident, "in"},  {"∉", Tok::Ident, "notin"},
        {"⊆", Tok::Ident, "subset"}, {"∪", Tok::Ident, "union"},
        {"∩", Tok::Ident, "inter"}, {"∖", Tok::Backslash, "\\"},
        {"↝", Tok::LeadsTo, "~>"}, {"⇝", Tok::LeadsTo, "~>"},
        {"≠", Tok::Neq, "/="},    {"≤", Tok::Leq, "<="},
        {"≥", Tok::Geq, ">="},    {"·", Tok::LooseDot, "."},
        {"↦", Tok::Arrow, "->"},
    };
    for (const auto& a : table) {
      if (starts(a.sym)) {
        advance(strlen(a.sym));
        push(a.tok, a.text, l, c);
        return true;
      }
    }
    return false;
  }

  void run() {
    while (pos < src.size()) {
      char ch = src[pos];
      int l = line, c = col;
      if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') { advance(); continue; }
      if (starts("--") && !starts("-->")) {
        while (pos < src.size() && src[pos] != '\n') advance();
        continue;
      }
      if ((unsigned char)ch >= 0x80) {
        if (unicode_alias(l, c)) continue;
        fail("unexpected character", l, c);
      }
      if (isalpha(ch) || ch == '_') {
        size_t start = pos;
        while (pos < src.size() && (isalnum(src[pos]) || src[pos] == '_')) advance();
        std::string word = src.substr(start, pos - start);
        push(Tok::Ident, word, l, c);
        if (pos < src.size() && src[pos] == '\'') {
          advance();
          push(Tok::Prime, "'", line, col - 1);
        }
        continue;
      }
      if (isdigit(ch)) {
        size_t start = pos;
        while (pos < src.size() && isdigit(src[pos])) advance();
        Token t{Tok::Int, src.substr(start, pos - start), 0, {file, l, c, line, col}};
        t.int_val = std::stol(t.text);
        toks.push_back(t);
        continue;
      }
      if (ch == '"') {
        advance();
        size_t start = pos;
        while (pos < src.size() && src[pos] != '"') advance();
        if (pos >= src.size()) fail("unterminated string", l, c);
        std::string text = src.substr(start, pos - start);
        advance();
        push(Tok::String, text, l, c);
        continue;
      }
      auto two = [&](const char* s, Tok k) {
        if (starts(s)) { advance(strlen(s)); push(k, s, l, c); return true; }
        return false;
      };
      if (two("..", Tok::DotDot)) continue;
      if (two(":=", Tok::Assign)) continue;
      if (two(":|", Tok::SuchThat)) continue;
      if (starts(":in") && (pos + 3 >= src.size() || !isalnum(src[pos + 3]))) {
        advance(3); push(Tok::ChooseIn, ":in", l, c); continue;
      }
      if (two("-->", Tok::TotalFn)) continue;
      if (two("+->", Tok::PartialFn)) continue;
      if (two("->", Tok::Arrow)) continue;
      if (two("~>", Tok::LeadsTo)) continue;
      if (two("=>", Tok::Implies)) continue;
      if (two("/=", Tok::Neq)) continue;
      if (two("<=", Tok::Leq)) continue;
      if (two(">=", Tok::Geq)) continue;
      if (ch == '.') {
        bool tight_before = pos > 0 && !isspace((unsigned char)src[pos - 1]);
        bool tight_after = pos + 1 < src.size() && !isspace((unsigned char)src[pos + 1]);
        advance();
        push(tight_before && tight_after ? Tok::TightDot : Tok::LooseDot, ".", l, c);
        continue;
      }
      switch (ch) {
        case '(': advance(); push(Tok::LParen, "(", l, c); continue;
        case ')': advance(); push(Tok::RParen, ")", l, c); continue;
        case '{': advance(); push(Tok::LBrace, "{", l, c); continue;
        case '}': advance(); push(Tok::RBrace, "}", l, c); continue;
        case '[': advance(); push(Tok::LBracket, "[", l, c); continue;
        case ']': advance(); push(Tok::RBracket, "]", l, c); continue;
        case ',': advance(); push(Tok::Comma, ",", l, c); continue;
        case ';': advance(); push(Tok::Semi, ";", l, c); continue;
        case ':': advance(); push(Tok::Colon, ":", l, c); continue;
        case '|': advance(); push(Tok::Bar, "|", l, c); continue;
        case '=': advance(); push(Tok::Eq, "=", l, c); continue;
        case '<': advance(); push(Tok::Lt, "<", l, c); continue;
        case '>': advance(); push(Tok::Gt, ">", l, c); continue;
        case '+': advance(); push(Tok::Plus, "+", l, c); continue;
        case '-': advance(); push(Tok::Minus, "-", l, c); continue;
        case '\\': advance(); push(Tok::Backslash, "\\", l, c); continue;
        case '\'': advance(); push(Tok::Prime, "'", l, c); continue;
        default: fail(std::string("unexpected character '") + ch + "'", l, c);
      }
    }
    push(Tok::Eof, "", line, col);
  }
};

const std::set<std::string> kKeywords = {
    "machine", "refines", "sets", "defs", "vars", "init", "invariant", "event",
    "during", "upon", "when", "then", "end", "property", "derivation", "depends",
    "witness", "by", "and", "or", "not", "in", "notin", "subset", "union", "inter",
    "dom", "ran", "inv", "img", "domsub", "ransub", "ovl", "un", "tr", "wd",
    "forall", "exists", "true", "false", "int", "mod", "bool", "set",
    "split", "transitivity", "ensure", "induction", "psp", "transient", "via",
    "falsifies", "use", "reuse", "from", "tag", "implication", "Skip",
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Scope {
  std::vector<std::pair<std::string, SortId>> bound;  // innermost last
  bool allow_primed = false;
};

struct Parser {
  std::vector<Token> toks;
  size_t at = 0;
  Machine m;
  std::map<std::string, std::pair<SortId, int>> elems;  // element name -> (sort, index)
  std::map<std::string, ExprPtr> defs;

  [[noreturn]] void fail(const SourceSpan& sp, const std::string& msg) {
    throw ParseError({{sp, msg}});
  }
  [[noreturn]] void fail_here(const std::string& msg) { fail(peek().span, msg); }

  const Token& peek(int k = 0) const { return toks[std::min(at + k, toks.size() - 1)]; }
  bool is(Tok t) const { return peek().kind == t; }
  bool is_word(const char* w) const { return is(Tok::Ident) && peek().text == w; }
  Token next() { return toks[at >= toks.size() ? toks.size() - 1 : at++]; }
  Token expect(Tok t, const std::string& what) {
    if (!is(t)) fail_here("expected " + what);
    return next();
  }
  Token expect_word(const char* w) {
    if (!is_word(w)) fail_here(std::string("expected '") + w + "'");
    return next();
  }
  bool accept(Tok t) {
    if (is(t)) { next(); return true; }
    return false;
  }
  bool accept_word(const char* w) {
    if (is_word(w)) { next(); return true; }
    return false;
  }
  std::string ident(const char* what) {
    if (!is(Tok::Ident)) fail_here(std::string("expected ") + what);
    if (kKeywords.count(peek().text)) fail_here("keyword '" + peek().text + "' cannot be used as " + what);
    return next().text;
  }

  bool at_section_keyword() const {
    if (is(Tok::Eof)) return true;
    if (!is(Tok::Ident)) return false;
    static const std::set<std::string> sections = {
        "sets", "defs", "vars", "init", "invariant", "event", "property",
        "derivation", "depends", "witness", "end"};
    return sections.count(peek().text) > 0;
  }

  // ---- types -------------------------------------------------------------

  SortId sort_ref() {
    Token t = peek();
    std::string n = ident("sort name");
    SortId s = m.sort_id(n);
    if (s < 0) fail(t.span, "undeclared sort " + n);
    return s;
  }

  SemType parse_type() {
    if (accept_word("bool")) return SemType::boolean();
    if (accept_word("set")) return SemType::set(sort_ref());
    SortId d = sort_ref();
    if (accept(Tok::PartialFn)) return SemType::map(d, sort_ref(), false);
    if (accept(Tok::TotalFn)) return SemType::map(d, sort_ref(), true);
    return SemType::elem(d);
  }

  // ---- expressions (untyped tree; sort checking is a separate pass) -------

  ExprPtr parse_pred(Scope& sc) { return parse_implies(sc); }

  ExprPtr parse_implies(Scope& sc) {
    ExprPtr lhs = parse_or(sc);
    if (accept(Tok::Implies)) {
      ExprPtr rhs = parse_implies(sc);
      auto e = mk2(ExprKind::Implies, lhs, rhs);
      e->span = lhs->span;
      return e;
    }
    return lhs;
  }

  ExprPtr parse_or(Scope& sc) {
    ExprPtr lhs = parse_and(sc);
    while (accept_word("or")) {
      ExprPtr rhs = parse_and(sc);
      auto e = mk_or(lhs, rhs);
      e->span = lhs->span;
      lhs = e;
    }
    return lhs;
  }

  ExprPtr parse_and(Scope& sc) {
    ExprPtr lhs = parse_not(sc);
    while (accept_word("and")) {
      ExprPtr rhs = parse_not(sc);
      auto e = mk_and(lhs, rhs);
      e->span = lhs->span;
      lhs = e;
    }
    return lhs;
  }

  ExprPtr parse_not(Scope& sc) {
    if (is_word("not")) {
      SourceSpan sp = next().span;
      ExprPtr a = parse_not(sc);
      auto e = mk_not(a);
      e->span = sp;
      return e;
    }
    return parse_cmp(sc);
  }

  ExprPtr parse_cmp(Scope& sc) {
    ExprPtr lhs = parse_setop(sc);
    SourceSpan sp = peek().span;
    if (accept(Tok::Eq)) return with_span(mk2(ExprKind::Equals, lhs, parse_setop(sc)), sp);
    if (accept(Tok::Neq)) return with_span(mk_not(mk2(ExprKind::Equals, lhs, parse_setop(sc))), sp);
    if (accept_word("in")) return with_span(mk2(ExprKind::Member, lhs, parse_setop(sc)), sp);
    if (accept_word("notin")) return with_span(mk_not(mk2(ExprKind::Member, lhs, parse_setop(sc))), sp);
    if (accept_word("subset")) return with_span(mk2(ExprKind::Subset, lhs, parse_setop(sc)), sp);
    if (accept(Tok::Lt)) return with_span(mk2(ExprKind::Less, lhs, parse_setop(sc)), sp);
    if (accept(Tok::Leq)) return with_span(mk2(ExprKind::Leq, lhs, parse_setop(sc)), sp);
    if (accept(Tok::Gt)) return with_span(mk2(ExprKind::Less, parse_setop(sc), lhs), sp);
    if (accept(Tok::Geq)) return with_span(mk2(ExprKind::Leq, parse_setop(sc), lhs), sp);
    return lhs;
  }

  static ExprPtr with_span(ExprPtr e, const SourceSpan& sp) {
    const_cast<Expr*>(e.get())->span = sp;
    return e;
  }

  ExprPtr parse_setop(Scope& sc) {
    ExprPtr lhs = parse_add(sc);
    while (true) {
      SourceSpan sp = peek().span;
      if (accept_word("union")) lhs = with_span(mk2(ExprKind::Union, lhs, parse_add(sc)), sp);
      else if (accept_word("inter")) lhs = with_span(mk2(ExprKind::Inter, lhs, parse_add(sc)), sp);
      else if (accept(Tok::Backslash)) lhs = with_span(mk2(ExprKind::Diff, lhs, parse_add(sc)), sp);
      else if (accept_word("ovl")) lhs = with_span(mk2(ExprKind::Ovl, lhs, parse_add(sc)), sp);
      else if (accept_word("domsub")) lhs = with_span(mk2(ExprKind::DomSub, lhs, parse_add(sc)), sp);
      else if (accept_word("ransub")) lhs = with_span(mk2(ExprKind::RanSub, lhs, parse_add(sc)), sp);
      else if (accept_word("img")) lhs = with_span(mk2(ExprKind::Image, lhs, parse_add(sc)), sp);
      else break;
    }
    return lhs;
  }

  ExprPtr parse_add(Scope& sc) {
    ExprPtr lhs = parse_app(sc);
    while (true) {
      SourceSpan sp = peek().span;
      if (accept(Tok::Plus)) lhs = with_span(mk2(ExprKind::Add, lhs, parse_app(sc)), sp);
      else if (accept(Tok::Minus)) lhs = with_span(mk2(ExprKind::Sub, lhs, parse_app(sc)), sp);
      else break;
    }
    return lhs;
  }

  ExprPtr parse_app(Scope& sc) {
    ExprPtr lhs = parse_prefix(sc);
    while (is(Tok::TightDot)) {
      SourceSpan sp = next().span;
      ExprPtr arg = parse_prefix(sc);
      lhs = with_span(mk2(ExprKind::Apply, lhs, arg), sp);
    }
    return lhs;
  }

  ExprPtr parse_prefix(Scope& sc) {
    SourceSpan sp = peek().span;
    if (accept_word("dom")) return with_span(mk1(ExprKind::Dom, parse_prefix(sc)), sp);
    if (accept_word("ran")) return with_span(mk1(ExprKind::Ran, parse_prefix(sc)), sp);
    if (accept_word("inv")) return with_span(mk1(ExprKind::InvWrap, parse_prefix(sc)), sp);
    return parse_atom(sc);
  }

  ExprPtr parse_atom(Scope& sc) {
    Token t = peek();
    if (accept(Tok::LParen)) {
      ExprPtr e = parse_pred(sc);
      expect(Tok::RParen, "')'");
      return e;
    }
    if (accept_word("true")) return with_span(mk_true(), t.span);
    if (accept_word("false")) return with_span(mk_false(), t.span);
    if (is(Tok::Int)) {
      next();
      return with_span(mk_int(t.int_val), t.span);
    }
    if (is_word("wd")) {
      next();
      expect(Tok::LParen, "'(' after wd");
      ExprPtr inner = parse_pred(sc);
      expect(Tok::RParen, "')'");
      return with_span(mk1(ExprKind::Wd, inner), t.span);
    }
    if (is_word("forall") || is_word("exists")) {
      bool fa = peek().text == "forall";
      next();
      expect(Tok::LParen, "'(' after quantifier");
      std::string binder = ident("binder name");
      expect(Tok::Colon, "':'");
      SortId s = sort_ref();
      expect(Tok::Bar, "'|' before quantifier range");
      sc.bound.emplace_back(binder, s);
      ExprPtr range = parse_pred(sc);
      if (!accept(Tok::LooseDot))
        fail_here("expected ' . ' separating quantifier range and term");
      ExprPtr term = parse_pred(sc);
      sc.bound.pop_back();
      expect(Tok::RParen, "')'");
      return with_span(mk_quant(fa ? ExprKind::Forall : ExprKind::Exists, binder, s, range, term),
                       t.span);
    }
    if (accept(Tok::LBrace)) {
      if (accept(Tok::RBrace)) return with_span(std::make_shared<Expr>(ExprKind::SetLit), t.span);
      ExprPtr first = parse_pred(sc);
      if (accept(Tok::Arrow)) {
        auto e = std::make_shared<Expr>(ExprKind::MapLit);
        e->entries.emplace_back(first, parse_pred(sc));
        while (accept(Tok::Comma)) {
          ExprPtr k = parse_pred(sc);
          expect(Tok::Arrow, "'->' in map literal");
          e->entries.emplace_back(k, parse_pred(sc));
        }
        expect(Tok::RBrace, "'}'");
        return with_span(e, t.span);
      }
      auto e = std::make_shared<Expr>(ExprKind::SetLit);
      e->args.push_back(first);
      while (accept(Tok::Comma)) e->args.push_back(parse_pred(sc));
      expect(Tok::RBrace, "'}'");
      return with_span(e, t.span);
    }
    if (accept(Tok::LBracket)) {
      ExprPtr lo = parse_pred(sc);
      expect(Tok::DotDot, "'..' in interval");
      ExprPtr hi = parse_pred(sc);
      expect(Tok::RParen, "')' closing half-open interval");
      return with_span(mk2(ExprKind::Interval, lo, hi), t.span);
    }
    if (is(Tok::Ident)) {
      std::string n = peek().text;
      if (kKeywords.count(n)) fail_here("unexpected keyword '" + n + "'");
      next();
      bool primed = accept(Tok::Prime);
      // innermost binders shadow everything
      for (auto it = sc.bound.rbegin(); it != sc.bound.rend(); ++it)
        if (it->first == n) {
          if (primed) fail(t.span, n + " is not a state variable and cannot be primed");
          return with_span(mk_bound(n), t.span);
        }
      if (m.var_index(n) >= 0) {
        if (primed && !sc.allow_primed)
          fail(t.span, "primed variable " + n + "' outside a before-after predicate");
        return with_span(mk_var(n, primed), t.span);
      }
      if (primed) fail(t.span, n + " is not a state variable and cannot be primed");
      auto d = defs.find(n);
      if (d != defs.end()) return d->second;
      auto el = elems.find(n);
      if (el != elems.end())
        return with_span(mk_elem(el->second.first, el->second.second), t.span);
      SortId s = m.sort_id(n);
      if (s >= 0) {
        // a sort name denotes its full carrier
        auto e = std::make_shared<Expr>(ExprKind::SetLit);
        const Sort& so = m.sorts[s];
        for (int i = 0; i < so.size(); ++i)
          e->args.push_back(mk_elem(s, i));
        if (so.is_int())
          return with_span(mk2(ExprKind::Interval, mk_int(so.lo), mk_int(so.hi + 1)), t.span);
        return with_span(e, t.span);
      }
      fail(t.span, "unknown identifier " + n);
    }
    fail_here("expected an expression");
  }

  // ---- machine sections ----------------------------------------------------

  void parse_sets() {
    while (!at_section_keyword()) {
      Token t = peek();
      std::string n = ident("sort name");
      expect(Tok::Eq, "'=' in sort declaration");
      Sort s;
      s.name = n;
      if (accept_word("int")) {
        bool neg = accept(Tok::Minus);
        Token lo = expect(Tok::Int, "lower bound");
        s.kind = Sort::Kind::IntRange;
        s.lo = neg ? -lo.int_val : lo.int_val;
        expect(Tok::DotDot, "'..'");
        bool neg2 = accept(Tok::Minus);
        Token hi = expect(Tok::Int, "upper bound");
        s.hi = neg2 ? -hi.int_val : hi.int_val;
        s.modular = accept_word("mod");
        if (s.lo > s.hi) fail(t.span, "empty integer range");
        if (s.size() > 62) fail(t.span, "sort too large (max 62 elements)");
      } else {
        expect(Tok::LBrace, "'{'");
        do {
          s.elems.push_back(ident("element name"));
        } while (accept(Tok::Comma));
        expect(Tok::RBrace, "'}'");
        if ((int)s.elems.size() > 62) fail(t.span, "sort too large (max 62 elements)");
      }
      if (m.sort_id(n) >= 0) fail(t.span, "duplicate sort " + n);
      m.sorts.push_back(s);
      SortId id = (SortId)m.sorts.size() - 1;
      if (s.kind == Sort::Kind::Enum)
        for (size_t i = 0; i < s.elems.size(); ++i) {
          if (elems.count(s.elems[i]))
            fail(t.span, "element " + s.elems[i] + " already declared in another sort");
          elems[s.elems[i]] = {id, (int)i};
        }
    }
  }

  void parse_defs() {
    while (!at_section_keyword()) {
      Token t = peek();
      std::string n = ident("definition name");
      expect(Tok::Eq, "'=' in definition");
      Scope sc;
      ExprPtr body = parse_pred(sc);
      if (defs.count(n)) fail(t.span, "duplicate definition " + n);
      defs[n] = body;
      m.defs.emplace_back(n, body);
    }
  }

  void parse_vars() {
    while (!at_section_keyword()) {
      Token t = peek();
      VarDecl v;
      v.name = ident("variable name");
      v.span = t.span;
      expect(Tok::Colon, "':' in variable declaration");
      v.type = parse_type();
      m.vars.push_back(v);
      accept(Tok::Semi);
    }
  }

  Assignment parse_assignment(Scope& sc) {
    Assignment a;
    a.span = peek().span;
    std::string v = ident("variable name");
    if (m.var_index(v) < 0) fail(a.span, "assignment to undeclared variable " + v);
    if (accept(Tok::TightDot)) {
      // pointwise form: f.x := e  ~~>  f := f ovl {x -> e};  f.x :in S desugars
      // through a such-that with a fresh choice binder.
      ExprPtr arg = parse_prefix(sc);
      if (accept(Tok::Assign)) {
        ExprPtr rhs = parse_pred(sc);
        a.kind = Assignment::Kind::Det;
        a.vars = {v};
        auto lit = std::make_shared<Expr>(ExprKind::MapLit);
        lit->entries.emplace_back(arg, rhs);
        a.rhs = mk2(ExprKind::Ovl, mk_var(v), lit);
        return a;
      }
      expect(Tok::ChooseIn, "':=' or ':in' after point application");
      ExprPtr set_e = parse_pred(sc);
      a.kind = Assignment::Kind::SuchThat;
      a.vars = {v};
      int vi = m.var_index(v);
      if (m.vars[vi].type.kind != SemType::Kind::Map)
        fail(a.span, "pointwise assignment to non-function variable " + v);
      SortId rng = m.vars[vi].type.sort2;
      std::string b = "_c";
      auto lit = std::make_shared<Expr>(ExprKind::MapLit);
      lit->entries.emplace_back(arg, mk_bound(b));
      ExprPtr ba = mk2(ExprKind::Equals, mk_var(v, true), mk2(ExprKind::Ovl, mk_var(v), lit));
      a.rhs = mk_quant(ExprKind::Exists, b, rng, mk2(ExprKind::Member, mk_bound(b), set_e), ba);
      return a;
    }
    a.vars = {v};
    while (accept(Tok::Comma)) a.vars.push_back(ident("variable name"));
    if (a.vars.size() == 1 && accept(Tok::Assign)) {
      a.kind = Assignment::Kind::Det;
      a.rhs = parse_pred(sc);
      return a;
    }
    if (a.vars.size() == 1 && accept(Tok::ChooseIn)) {
      a.kind = Assignment::Kind::ChooseIn;
      a.rhs = parse_pred(sc);
      return a;
    }
    expect(Tok::SuchThat, "':=', ':in' or ':|'");
    a.kind = Assignment::Kind::SuchThat;
    Scope inner = sc;
    inner.allow_primed = true;
    a.rhs = parse_pred(inner);
    return a;
  }

  void parse_event() {
    Event ev;
    ev.span = peek().span;
    ev.name = ident("event name");
    if (accept(Tok::LBracket)) {
      do {
        std::string in = ident("index name");
        expect(Tok::Colon, "':'");
        ev.indices.emplace_back(in, sort_ref());
      } while (accept(Tok::Comma));
      expect(Tok::RBracket, "']'");
    }
    Scope sc;
    for (const auto& [n, s] : ev.indices) sc.bound.emplace_back(n, s);
    if (accept_word("during")) ev.coarse_decl = parse_pred(sc);
    if (accept_word("upon")) ev.fine_decl = parse_pred(sc);
    if (accept_word("when")) ev.guard_decl = parse_pred(sc);
    expect_word("then");
    while (!is_word("end")) {
      ev.action.assignments.push_back(parse_assignment(sc));
      if (!accept(Tok::Semi) && !is_word("end")) fail_here("expected ';' or 'end'");
    }
    expect_word("end");
    m.events.push_back(std::move(ev));
  }

  std::vector<std::pair<std::string, SortId>> parse_free_vars() {
    std::vector<std::pair<std::string, SortId>> out;
    if (accept(Tok::LBracket)) {
      do {
        std::string n = ident("free variable name");
        expect(Tok::Colon, "':'");
        out.emplace_back(n, sort_ref());
      } while (accept(Tok::Comma));
      expect(Tok::RBracket, "']'");
    }
    return out;
  }

  void parse_invariant() {
    Property p;
    p.span = peek().span;
    p.kind = PropKind::Invariant;
    p.label = ident("invariant label");
    p.free_vars = parse_free_vars();
    expect(Tok::Colon, "':'");
    Scope sc;
    for (const auto& fv : p.free_vars) sc.bound.push_back(fv);
    p.lhs = parse_pred(sc);
    m.invariants.push_back(std::move(p));
  }

  void parse_property() {
    Property p;
    p.span = peek().span;
    p.label = ident("property label");
    p.free_vars = parse_free_vars();
    expect(Tok::Colon, "':'");
    Scope sc;
    for (const auto& fv : p.free_vars) sc.bound.push_back(fv);
    if (accept_word("tr")) {
      p.kind = PropKind::Transient;
      p.lhs = parse_pred(sc);
    } else {
      p.lhs = parse_pred(sc);
      if (accept(Tok::LeadsTo)) {
        p.kind = PropKind::LeadsTo;
        p.rhs = parse_pred(sc);
      } else if (accept_word("un")) {
        p.kind = PropKind::Unless;
        p.rhs = parse_pred(sc);
      } else {
        fail_here("expected '~>' or 'un' in property");
      }
    }
    m.properties.push_back(std::move(p));
  }

  std::vector<RuleAppPtr> parse_script(Scope& sc) {
    std::vector<RuleAppPtr> steps;
    do {
      steps.push_back(parse_step(sc));
    } while (accept(Tok::Semi));
    return steps;
  }

  RuleAppPtr parse_step(Scope& sc) {
    auto r = std::make_shared<RuleApp>();
    r->span = peek().span;
    if (accept_word("implication")) { r->kind = RuleApp::Kind::Implication; return r; }
    if (accept_word("split")) { r->kind = RuleApp::Kind::Split; return r; }
    if (accept_word("transitivity")) {
      r->kind = RuleApp::Kind::Transitivity;
      expect(Tok::LParen, "'('");
      r->mid = parse_pred(sc);
      expect(Tok::RParen, "')'");
      expect(Tok::LBrace, "'{' opening the first sub-proof");
      r->branches.push_back(parse_script(sc));
      expect(Tok::RBrace, "'}'");
      expect(Tok::LBrace, "'{' opening the second sub-proof");
      r->branches.push_back(parse_script(sc));
      expect(Tok::RBrace, "'}'");
      return r;
    }
    if (accept_word("ensure")) {
      r->kind = RuleApp::Kind::Ensure;
      expect(Tok::LParen, "'('");
      r->label = ident("unless label");
      expect(Tok::RParen, "')'");
      return r;
    }
    if (accept_word("induction")) {
      r->kind = RuleApp::Kind::Induction;
      expect(Tok::LParen, "'('");
      r->variant = parse_pred(sc);
      expect(Tok::Comma, "',' before the induction variable");
      r->variant_var = ident("induction variable");
      expect(Tok::Colon, "':'");
      r->variant_sort = sort_ref();
      expect(Tok::RParen, "')'");
      return r;
    }
    if (accept_word("psp")) {
      r->kind = RuleApp::Kind::Psp;
      expect(Tok::LParen, "'('");
      r->label2 = ident("leads-to label");
      expect(Tok::Comma, "','");
      r->label = ident("unless label");
      expect(Tok::RParen, "')'");
      return r;
    }
    if (accept_word("transient")) {
      r->kind = RuleApp::Kind::TransientFalsifies;
      expect_word("via");
      expect_word("falsifies");
      r->event = ident("event name");
      if (accept(Tok::LBracket)) {
        do {
          r->idx_exprs.push_back(parse_pred(sc));
        } while (accept(Tok::Comma));
        expect(Tok::RBracket, "']'");
      }
      if (accept_word("tag")) r->tag = expect(Tok::String, "tag string").text;
      return r;
    }
    if (accept_word("use")) {
      r->kind = RuleApp::Kind::Use;
      r->label = ident("property label");
      return r;
    }
    if (accept_word("reuse")) {
      r->kind = RuleApp::Kind::Reuse;
      r->label = ident("property label");
      expect_word("from");
      r->from_machine = ident("machine name");
      return r;
    }
    fail_here("expected a derivation rule");
  }

  void parse_derivation() {
    Derivation d;
    d.span = peek().span;
    d.goal_label = ident("derivation goal label");
    expect_word("by");
    const Property* p = nullptr;
    for (const auto& pr : m.properties)
      if (pr.label == d.goal_label) p = &pr;
    Scope sc;
    if (p)
      for (const auto& fv : p->free_vars) sc.bound.push_back(fv);
    d.script = parse_script(sc);
    m.derivations.push_back(std::move(d));
  }

  void parse_depends() {
    std::string lbl = ident("property label");
    expect(Tok::Arrow, "'->'");
    do {
      m.depends.emplace_back(lbl, ident("event name"));
    } while (accept(Tok::Comma));
  }

  void parse_witness() {
    WitnessDecl w;
    w.span = peek().span;
    w.event = ident("event name");
    if (!accept(Tok::TightDot) && !accept(Tok::LooseDot)) fail_here("expected '.'");
    w.index = ident("index name");
    expect(Tok::Assign, "':='");
    Scope sc;
    w.expr = parse_pred(sc);
    m.witnesses.push_back(std::move(w));
  }

  Machine run() {
    expect_word("machine");
    m.span = peek().span;
    m.name = ident("machine name");
    if (accept_word("refines")) m.refines = ident("machine name");
    while (!is_word("end")) {
      if (is(Tok::Eof)) fail_here("expected 'end'");
      if (accept_word("sets")) parse_sets();
      else if (accept_word("defs")) parse_defs();
      else if (accept_word("vars")) parse_vars();
      else if (accept_word("init")) { Scope sc; m.init = parse_pred(sc); }
      else if (accept_word("invariant")) parse_invariant();
      else if (accept_word("event")) parse_event();
      else if (accept_word("property")) parse_property();
      else if (accept_word("derivation")) parse_derivation();
      else if (accept_word("depends")) parse_depends();
      else if (accept_word("witness")) parse_witness();
      else fail_here("expected a machine section");
    }
    expect_word("end");
    if (!is(Tok::Eof)) fail_here("trailing input after 'end'");
    return std::move(m);
  }
};

}  // namespace

// sortcheck.cpp
void sort_check(const Machine& m, const ExprPtr& e, const SemType& expected,
                std::vector<std::pair<std::string, SortId>> bound, bool allow_primed);

Machine parse_machine(const std::string& text, const std::string& filename) {
  Lexer lex(text, filename);
  lex.run();
  Parser p;
  p.toks = std::move(lex.toks);
  Machine m = p.run();
  normalize(m);

  auto diags = well_formed(m);
  if (!diags.empty()) throw ParseError(diags);

  // sort-check all predicates in their scopes
  auto chk = [&](const ExprPtr& e, const SemType& expect,
                 const std::vector<std::pair<std::string, SortId>>& bound, bool primed) {
    sort_check(m, e, expect, bound, primed);
  };
  chk(m.init, SemType::boolean(), {}, false);
  for (const auto& inv : m.invariants) chk(inv.lhs, SemType::boolean(), inv.free_vars, false);
  for (const auto& ev : m.events) {
    std::vector<std::pair<std::string, SortId>> ixs(ev.indices.begin(), ev.indices.end());
    chk(ev.coarse, SemType::boolean(), ixs, false);
    chk(ev.fine, SemType::boolean(), ixs, false);
    chk(ev.guard, SemType::boolean(), ixs, false);
    for (const auto& a : ev.action.assignments) {
      switch (a.kind) {
        case Assignment::Kind::Det:
          chk(a.rhs, m.vars[m.var_index(a.vars[0])].type, ixs, false);
          break;
        case Assignment::Kind::ChooseIn: {
          const SemType& t = m.vars[m.var_index(a.vars[0])].type;
          if (t.kind != SemType::Kind::Elem)
            throw ParseError({{a.span, "':in' needs an element-typed variable"}});
          chk(a.rhs, SemType::set(t.sort), ixs, false);
          break;
        }
        case Assignment::Kind::SuchThat:
          chk(a.rhs, SemType::boolean(), ixs, true);
          break;
      }
    }
  }
  for (const auto& pr : m.properties) {
    chk(pr.lhs, SemType::boolean(), pr.free_vars, false);
    if (pr.rhs) chk(pr.rhs, SemType::boolean(), pr.free_vars, false);
  }
  for (const auto& w : m.witnesses) {
    const Event* ev = m.event(w.event);
    SortId s = -1;
    for (const auto& [in, is] : ev->indices)
      if (in == w.index) s = is;
    if (s < 0) throw ParseError({{w.span, "event " + w.event + " has no index " + w.index}});
    chk(w.expr, SemType::elem(s), {}, false);
  }
  // derivation scripts: expressions are checked against their goal's scope
  for (const auto& d : m.derivations) {
    const Property* pr = m.property(d.goal_label);
    std::vector<std::pair<std::string, SortId>> fv = pr->free_vars;
    std::function<void(const std::vector<RuleAppPtr>&, std::vector<std::pair<std::string, SortId>>)>
        walk = [&](const std::vector<RuleAppPtr>& script,
                   std::vector<std::pair<std::string, SortId>> scope) {
          for (const auto& r : script) {
            if (r->kind == RuleApp::Kind::Transitivity) {
              chk(r->mid, SemType::boolean(), scope, false);
              walk(r->branches[0], scope);
              walk(r->branches[1], scope);
            } else if (r->kind == RuleApp::Kind::Induction) {
              chk(r->variant, SemType::elem(r->variant_sort), scope, false);
              scope.emplace_back(r->variant_var, r->variant_sort);
            } else if (r->kind == RuleApp::Kind::TransientFalsifies) {
              const Event* ev = m.event(r->event);
              if (!ev) throw ParseError({{r->span, "falsifies names undeclared event " + r->event}});
              if (ev->indices.size() != r->idx_exprs.size())
                throw ParseError({{r->span, "falsifies index arity mismatch for " + r->event}});
              for (size_t i = 0; i < r->idx_exprs.size(); ++i)
                chk(r->idx_exprs[i], SemType::elem(ev->indices[i].second), scope, false);
            }
          }
        };
    walk(d.script, fv);
  }
  return m;
}

namespace {

ExprPtr parse_in_scope(const std::string& text, const Machine& context,
                       const std::vector<std::pair<std::string, SortId>>& extra,
                       bool allow_primed, bool expect_bool) {
  Lexer lex(text, "<predicate>");
  lex.run();
  Parser p;
  p.toks = std::move(lex.toks);
  p.m = context;  // scope only
  for (const auto& s : context.sorts)
    if (s.kind == Sort::Kind::Enum)
      for (size_t i = 0; i < s.elems.size(); ++i)
        p.elems[s.elems[i]] = {context.sort_id(s.name), (int)i};
  for (const auto& [n, b] : context.defs) p.defs[n] = b;
  Scope sc;
  sc.allow_primed = allow_primed;
  for (const auto& fv : extra) sc.bound.push_back(fv);
  ExprPtr e = p.parse_pred(sc);
  if (!p.is(Tok::Eof)) p.fail_here("trailing input after predicate");
  sort_check(context, e, expect_bool ? SemType::boolean() : SemType{}, extra, allow_primed);
  return e;
}

}  // namespace

ExprPtr parse_predicate(const std::string& text, const Machine& context,
                        const std::vector<std::pair<std::string, SortId>>& extra,
                        bool allow_primed) {
  return parse_in_scope(text, context, extra, allow_primed, true);
}

ExprPtr parse_expression(const std::string& text, const Machine& context,
                         const std::vector<std::pair<std::string, SortId>>& extra) {
  return parse_in_scope(text, context, extra, false, false);
}

}  // namespace unitb
