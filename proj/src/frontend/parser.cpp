// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adomp/frontend.hpp"

namespace adomp {

namespace {

enum class Tok { Ident, Int, Real, Op, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int column = 0;
  std::int64_t int_value = 0;
  double real_value = 0.0;
};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

/// Tokenizes one logical line. `base_col` is the 1-based column of text[0].
std::vector<Token> lex(std::string_view text, int line, int base_col) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto col = [&](std::size_t pos) { return base_col + static_cast<int>(pos); };
  while (i < text.size()) {
    char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    Token t;
    t.column = col(i);
    if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < text.size() && is_ident_char(text[j])) ++j;
      t.kind = Tok::Ident;
      t.text = std::string(text.substr(i, j - i));
      i = j;
    } else if (is_digit(c) || (c == '.' && i + 1 < text.size() && is_digit(text[i + 1]))) {
      std::size_t j = i;
      bool is_real = false;
      while (j < text.size() && is_digit(text[j])) ++j;
      if (j < text.size() && text[j] == '.' &&
          !(j + 1 < text.size() && std::isalpha(static_cast<unsigned char>(text[j + 1])) &&
            text[j + 1] != 'e' && text[j + 1] != 'E' && text[j + 1] != 'd' && text[j + 1] != 'D')) {
        is_real = true;
        ++j;
        while (j < text.size() && is_digit(text[j])) ++j;
      }
      if (j < text.size() && (text[j] == 'e' || text[j] == 'E' || text[j] == 'd' || text[j] == 'D')) {
        std::size_t k = j + 1;
        if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < text.size() && is_digit(text[k])) {
          is_real = true;
          while (k < text.size() && is_digit(text[k])) ++k;
          j = k;
        }
      }
      std::string lit(text.substr(i, j - i));
      t.text = lit;
      if (is_real) {
        for (char& ch : lit)
          if (ch == 'd' || ch == 'D') ch = 'e';
        t.kind = Tok::Real;
        t.real_value = std::strtod(lit.c_str(), nullptr);
      } else {
        t.kind = Tok::Int;
        auto [p, ec] = std::from_chars(lit.data(), lit.data() + lit.size(), t.int_value);
        if (ec != std::errc()) throw SyntaxError(line, t.column, "integer literal out of range");
      }
      i = j;
    } else if (c == '.') {
      // .and. .or. .not.
      std::size_t j = i + 1;
      while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
      if (j >= text.size() || text[j] != '.')
        throw SyntaxError(line, t.column, "unexpected '.'");
      std::string word = lower(text.substr(i, j - i + 1));
      if (word != ".and." && word != ".or." && word != ".not.")
        throw SyntaxError(line, t.column, "unknown operator '" + word + "'");
      t.kind = Tok::Op;
      t.text = word;
      i = j + 1;
    } else {
      static const char* two[] = {"+=", "==", "/=", "<=", ">=", "::"};
      t.kind = Tok::Op;
      bool matched = false;
      for (const char* op : two) {
        if (text.substr(i, 2) == op) {
          t.text = op;
          i += 2;
          matched = true;
          break;
        }
      }
      if (!matched) {
        if (std::string_view("+-*/(),=<>:").find(c) == std::string_view::npos)
          throw SyntaxError(line, t.column, std::string("unexpected character '") + c + "'");
        t.text = std::string(1, c);
        ++i;
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.column = col(text.size());
  out.push_back(end);
  return out;
}

enum class LineKind { Code, Omp, Ad };

struct Line {
  int number = 0;
  LineKind kind = LineKind::Code;
  std::vector<Token> tokens;
};

std::vector<Line> split_lines(std::string_view source, bool omp_enabled) {
  std::vector<Line> lines;
  int number = 0;
  std::size_t start = 0;
  while (start <= source.size()) {
    std::size_t nl = source.find('\n', start);
    std::string_view raw =
        source.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++number;
    std::size_t first = raw.find_first_not_of(" \t\r");
    if (first != std::string_view::npos) {
      std::string_view body = raw.substr(first);
      std::string head = lower(body.substr(0, 5));
      Line ln;
      ln.number = number;
      if (head == "!$omp") {
        if (omp_enabled) {
          ln.kind = LineKind::Omp;
          std::string_view rest = body.substr(5);
          auto cut = rest.find('!');
          ln.tokens = lex(rest.substr(0, cut), number, static_cast<int>(first) + 6);
          lines.push_back(std::move(ln));
        }
      } else if (lower(body.substr(0, 4)) == "!$ad") {
        if (omp_enabled) {
          ln.kind = LineKind::Ad;
          std::string_view rest = body.substr(4);
          auto cut = rest.find('!');
          ln.tokens = lex(rest.substr(0, cut), number, static_cast<int>(first) + 5);
          lines.push_back(std::move(ln));
        }
      } else if (body[0] != '!') {
        auto cut = body.find('!');
        ln.kind = LineKind::Code;
        ln.tokens = lex(body.substr(0, cut), number, static_cast<int>(first) + 1);
        if (ln.tokens.size() > 1) lines.push_back(std::move(ln));
      }
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

/// Cursor over the tokens of one line.
class TokenCursor {
 public:
  TokenCursor(const std::vector<Token>& toks, int line) : toks_(toks), line_(line) {}

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t k = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[k];
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == Tok::End; }
  bool is_op(const char* op, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Op && t.text == op;
  }
  bool is_word(const char* w, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Ident && lower(t.text) == w;
  }
  bool accept_op(const char* op) {
    if (!is_op(op)) return false;
    next();
    return true;
  }
  bool accept_word(const char* w) {
    if (!is_word(w)) return false;
    next();
    return true;
  }
  void expect_op(const char* op) {
    if (!accept_op(op)) fail(std::string("expected '") + op + "'");
  }
  void expect_word(const char* w) {
    if (!accept_word(w)) fail(std::string("expected '") + w + "'");
  }
  std::string expect_ident() {
    if (peek().kind != Tok::Ident) fail("expected identifier");
    return next().text;
  }
  void expect_end() {
    if (!at_end()) fail("unexpected '" + peek().text + "'");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    std::string got = t.kind == Tok::End ? "end of line" : "'" + t.text + "'";
    throw SyntaxError(line_, t.column, msg + " (found " + got + ")");
  }
  int line() const { return line_; }
  SourceLoc loc() const { return SourceLoc{line_, peek().column}; }

 private:
  const std::vector<Token>& toks_;
  std::size_t pos_ = 0;
  int line_;
};

const char* kReserved[] = {"do", "end", "enddo", "endif", "if", "then", "else", "call",
                           "real", "integer", "subroutine", "program"};

bool is_reserved(const std::string& w) {
  std::string l = lower(w);
  return std::any_of(std::begin(kReserved), std::end(kReserved), [&](const char* r) { return l == r; });
}

std::optional<Intrinsic> intrinsic_named(const std::string& name) {
  std::string l = lower(name);
  if (l == "sin") return Intrinsic::Sin;
  if (l == "cos") return Intrinsic::Cos;
  if (l == "exp") return Intrinsic::Exp;
  if (l == "sqrt") return Intrinsic::Sqrt;
  if (l == "mod") return Intrinsic::Mod;
  if (l == "max") return Intrinsic::Max;
  if (l == "min") return Intrinsic::Min;
  return std::nullopt;
}

class ExprParser {
 public:
  explicit ExprParser(TokenCursor& c) : c_(c) {}

  Expr parse() { return parse_or(); }

  Ref parse_ref() {
    std::string name = c_.expect_ident();
    if (is_reserved(name)) c_.fail("reserved word used as variable");
    Ref r{name, {}};
    if (c_.accept_op("(")) {
      r.index = Box<Expr>(parse());
      c_.expect_op(")");
    }
    return r;
  }

 private:
  Expr parse_or() {
    Expr e = parse_and();
    while (c_.accept_op(".or.")) e = build::binary(BinaryOp::Or, std::move(e), parse_and());
    return e;
  }
  Expr parse_and() {
    Expr e = parse_not();
    while (c_.accept_op(".and.")) e = build::binary(BinaryOp::And, std::move(e), parse_not());
    return e;
  }
  Expr parse_not() {
    if (c_.accept_op(".not.")) return Expr{Unary{UnaryOp::Not, Box<Expr>(parse_not())}};
    return parse_cmp();
  }
  Expr parse_cmp() {
    Expr e = parse_add();
    static const std::pair<const char*, BinaryOp> ops[] = {
        {"==", BinaryOp::Eq}, {"/=", BinaryOp::Ne}, {"<=", BinaryOp::Le},
        {">=", BinaryOp::Ge}, {"<", BinaryOp::Lt},  {">", BinaryOp::Gt}};
    for (auto [text, op] : ops) {
      if (c_.accept_op(text)) return build::binary(op, std::move(e), parse_add());
    }
    return e;
  }
  Expr parse_add() {
    Expr e = parse_mul();
    for (;;) {
      if (c_.accept_op("+")) {
        e = build::add(std::move(e), parse_mul());
      } else if (c_.accept_op("-")) {
        e = build::sub(std::move(e), parse_mul());
      } else {
        return e;
      }
    }
  }
  Expr parse_mul() {
    Expr e = parse_unary();
    for (;;) {
      if (c_.accept_op("*")) {
        e = build::mul(std::move(e), parse_unary());
      } else if (c_.accept_op("/")) {
        e = build::div(std::move(e), parse_unary());
      } else {
        return e;
      }
    }
  }
  Expr parse_unary() {
    if (c_.is_op("-")) {
      const Token& lit = c_.peek(1);
      if (lit.kind == Tok::Int) {
        c_.next();
        c_.next();
        return build::integer(-lit.int_value);
      }
      if (lit.kind == Tok::Real) {
        c_.next();
        c_.next();
        return build::real(-lit.real_value);
      }
      c_.next();
      return build::neg(parse_unary());
    }
    if (c_.accept_op("+")) return parse_unary();
    return parse_primary();
  }
  Expr parse_primary() {
    const Token& t = c_.peek();
    if (t.kind == Tok::Int) {
      c_.next();
      return build::integer(t.int_value);
    }
    if (t.kind == Tok::Real) {
      c_.next();
      return build::real(t.real_value);
    }
    if (c_.accept_op("(")) {
      Expr e = parse();
      c_.expect_op(")");
      return e;
    }
    if (t.kind == Tok::Ident) {
      if (auto fn = intrinsic_named(t.text); fn && c_.is_op("(", 1)) {
        c_.next();
        c_.next();
        std::vector<Expr> args;
        if (!c_.is_op(")")) {
          args.push_back(parse());
          while (c_.accept_op(",")) args.push_back(parse());
        }
        c_.expect_op(")");
        std::size_t want = (*fn == Intrinsic::Mod || *fn == Intrinsic::Max || *fn == Intrinsic::Min) ? 2 : 1;
        if (args.size() != want) c_.fail(to_string(*fn) + " expects " + std::to_string(want) + " argument(s)");
        return build::call(*fn, std::move(args));
      }
      return Expr{parse_ref()};
    }
    c_.fail("expected expression");
  }

  TokenCursor& c_;
};

struct Terminator {
  enum Kind { EndDo, Else, EndIf, EndRoutine, EndParallel, EndOfInput } kind;
  int line = 0;
};

class Parser {
 public:
  Parser(std::vector<Line> lines) : lines_(std::move(lines)) {}

  Program parse_program() {
    Program prog;
    if (pos_ >= lines_.size()) throw SyntaxError(1, 1, "empty source: expected 'subroutine'");
    {
      const Line& ln = cur();
      if (ln.kind != LineKind::Code) throw SyntaxError(ln.number, 1, "expected 'subroutine' before pragmas");
      TokenCursor c(ln.tokens, ln.number);
      if (!c.accept_word("subroutine") && !c.accept_word("program")) c.fail("expected 'subroutine'");
      prog.name = c.expect_ident();
      if (c.accept_op("(")) {
        if (!c.is_op(")")) {
          prog.params.push_back(c.expect_ident());
          while (c.accept_op(",")) prog.params.push_back(c.expect_ident());
        }
        c.expect_op(")");
      }
      c.expect_end();
      ++pos_;
    }
    while (pos_ < lines_.size() && cur().kind == LineKind::Code &&
           (starts_with_word(cur(), "real") || starts_with_word(cur(), "integer"))) {
      parse_decl(cur(), prog);
      ++pos_;
    }
    Terminator term;
    prog.body = parse_block(term, /*in_region=*/false);
    if (term.kind != Terminator::EndRoutine)
      throw SyntaxError(term.line, 1, "expected 'end subroutine'");
    if (pos_ < lines_.size())
      throw SyntaxError(cur().number, 1, "only one routine per source file is allowed");
    return prog;
  }

 private:
  const Line& cur() const { return lines_[pos_]; }

  static bool starts_with_word(const Line& ln, const char* w) {
    return !ln.tokens.empty() && ln.tokens[0].kind == Tok::Ident && lower(ln.tokens[0].text) == w;
  }

  void parse_decl(const Line& ln, Program& prog) {
    TokenCursor c(ln.tokens, ln.number);
    VarDecl proto;
    proto.type = c.accept_word("real") ? BaseType::Real : (c.next(), BaseType::Integer);
    while (c.accept_op(",")) {
      if (c.accept_word("intent")) {
        c.expect_op("(");
        if (c.accept_word("in")) {
          proto.intent = Intent::In;
        } else if (c.accept_word("out")) {
          proto.intent = Intent::Out;
        } else if (c.accept_word("inout")) {
          proto.intent = Intent::InOut;
        } else {
          c.fail("expected in, out or inout");
        }
        c.expect_op(")");
      } else if (c.accept_word("active")) {
        proto.active = true;
      } else if (c.accept_word("inactive")) {
        proto.active = false;
      } else {
        c.fail("unknown declaration attribute");
      }
    }
    c.accept_op("::");
    do {
      VarDecl d = proto;
      d.loc = c.loc();
      d.name = c.expect_ident();
      if (is_reserved(d.name)) c.fail("reserved word used as variable name");
      if (c.accept_op("(")) {
        TokenCursor& cc = c;
        ExprParser ep(cc);
        d.extent = Box<Expr>(ep.parse());
        c.expect_op(")");
      }
      prog.decls.push_back(std::move(d));
    } while (c.accept_op(","));
    c.expect_end();
  }

  static ClauseSet parse_clauses(TokenCursor& c, bool is_override) {
    ClauseSet cs;
    auto add_scope = [&](const std::string& var, Scope s) {
      if (cs.scoping.count(var))
        throw SemanticError(c.line(), "variable '" + var + "' appears in more than one scoping clause");
      cs.scoping[var] = ScopeEntry{s, true};
    };
    auto add_override = [&](const std::string& var, OverrideScope s) {
      if (cs.ad_override.count(var))
        throw SemanticError(c.line(), "variable '" + var + "' appears in more than one omp_adjoint clause");
      cs.ad_override[var] = s;
    };
    auto var_list = [&](auto&& sink) {
      c.expect_op("(");
      sink(c.expect_ident());
      while (c.accept_op(",")) sink(c.expect_ident());
      c.expect_op(")");
    };
    bool have_schedule = false;
    while (!c.at_end()) {
      c.accept_op(",");
      if (c.at_end()) break;
      std::string word = lower(c.expect_ident());
      if (word == "reduction") {
        c.expect_op("(");
        if (!c.accept_op("+")) c.fail("only reduction(+:...) is supported");
        c.expect_op(":");
        auto sink = [&](const std::string& v) {
          if (is_override)
            add_override(v, OverrideScope::ReductionSum);
          else
            add_scope(v, Scope::ReductionSum);
        };
        sink(c.expect_ident());
        while (c.accept_op(",")) sink(c.expect_ident());
        c.expect_op(")");
      } else if (is_override) {
        OverrideScope s;
        if (word == "shared") {
          s = OverrideScope::Shared;
        } else if (word == "atomic") {
          s = OverrideScope::AtomicShared;
        } else {
          c.fail("unknown omp_adjoint clause '" + word + "'");
        }
        var_list([&](const std::string& v) { add_override(v, s); });
      } else if (word == "schedule") {
        if (have_schedule) throw SemanticError(c.line(), "duplicate schedule clause");
        have_schedule = true;
        c.expect_op("(");
        if (c.accept_word("static")) {
          cs.schedule.kind = ScheduleKind::Static;
        } else if (c.accept_word("dynamic")) {
          cs.schedule.kind = ScheduleKind::Dynamic;
        } else {
          c.fail("expected static or dynamic schedule");
        }
        if (c.accept_op(",")) {
          const Token& t = c.peek();
          if (t.kind != Tok::Int || t.int_value <= 0) c.fail("schedule chunk must be a positive integer");
          cs.schedule.chunk = t.int_value;
          c.next();
        }
        c.expect_op(")");
      } else {
        Scope s;
        if (word == "shared") {
          s = Scope::Shared;
        } else if (word == "private") {
          s = Scope::Private;
        } else if (word == "firstprivate") {
          s = Scope::FirstPrivate;
        } else if (word == "lastprivate") {
          s = Scope::LastPrivate;
        } else {
          c.fail("unknown clause '" + word + "'");
        }
        var_list([&](const std::string& v) { add_scope(v, s); });
      }
    }
    return cs;
  }

  SeqLoop parse_do_header(const Line& ln) {
    TokenCursor c(ln.tokens, ln.number);
    SeqLoop loop;
    loop.loc = SourceLoc{ln.number, c.peek().column};
    c.expect_word("do");
    loop.counter = c.expect_ident();
    c.expect_op("=");
    ExprParser ep(c);
    loop.start = ep.parse();
    c.expect_op(",");
    loop.end = ep.parse();
    if (c.accept_op(","))
      loop.stride = ep.parse();
    else
      loop.stride = build::integer(1);
    c.expect_end();
    return loop;
  }

  SeqLoop parse_loop(bool in_region) {
    const Line& ln = cur();
    if (ln.kind != LineKind::Code || !starts_with_word(ln, "do"))
      throw SyntaxError(ln.number, 1, "expected a do loop after the worksharing pragma");
    SeqLoop loop = parse_do_header(ln);
    ++pos_;
    Terminator term;
    loop.body = parse_block(term, in_region);
    if (term.kind != Terminator::EndDo) throw SyntaxError(term.line, 1, "expected 'end do'");
    return loop;
  }

  /// Consumes an optional trailing `!$omp end <words>` line.
  void skip_optional_end_pragma(std::initializer_list<const char*> words) {
    if (pos_ >= lines_.size() || cur().kind != LineKind::Omp) return;
    TokenCursor c(cur().tokens, cur().number);
    if (!c.accept_word("end")) return;
    for (const char* w : words)
      if (!c.accept_word(w)) return;
    if (!c.at_end()) return;
    ++pos_;
  }

  Stmt parse_omp(bool in_region) {
    const Line& ln = cur();
    TokenCursor c(ln.tokens, ln.number);
    SourceLoc loc{ln.number, c.peek().column};
    if (c.accept_word("atomic")) {
      c.expect_end();
      ++pos_;
      if (pos_ >= lines_.size() || cur().kind != LineKind::Code)
        throw SyntaxError(ln.number, 1, "'!$omp atomic' must precede an increment statement");
      Stmt s = parse_code_stmt(in_region);
      auto* inc = std::get_if<Increment>(&s.node);
      if (!inc) throw SyntaxError(ln.number + 1, 1, "'!$omp atomic' must precede an increment statement");
      inc->atomic = true;
      return s;
    }
    if (c.accept_word("parallel")) {
      if (in_region) throw SemanticError(ln.number, "nested parallel constructs are not supported");
      bool is_loop = c.accept_word("do");
      ClauseSet cs = parse_clauses(c, false);
      ++pos_;
      if (is_loop) {
        ParallelLoop pl;
        pl.loc = loc;
        pl.clauses = std::move(cs);
        pl.clauses.ad_override = std::move(pending_override_);
        pending_override_.clear();
        have_override_ = false;
        SeqLoop body = parse_loop(true);
        pl.counter = std::move(body.counter);
        pl.start = std::move(body.start);
        pl.end = std::move(body.end);
        pl.stride = std::move(body.stride);
        pl.body = std::move(body.body);
        skip_optional_end_pragma({"parallel", "do"});
        return Stmt{std::move(pl)};
      }
      if (have_override_) throw SemanticError(ln.number, "'!$ad omp_adjoint' must precede '!$omp parallel do'");
      if (cs.schedule.kind != ScheduleKind::Unspecified)
        throw SemanticError(ln.number, "schedule clause is not allowed on a parallel region");
      for (const auto& [v, e] : cs.scoping)
        if (e.scope == Scope::LastPrivate)
          throw SemanticError(ln.number, "lastprivate is not allowed on a parallel region");
      ParallelRegion region;
      region.loc = loc;
      region.clauses = std::move(cs);
      Terminator term;
      region.body = parse_block(term, true);
      if (term.kind != Terminator::EndParallel)
        throw SyntaxError(term.line, 1, "expected '!$omp end parallel'");
      return Stmt{std::move(region)};
    }
    if (c.accept_word("do")) {
      if (!in_region) throw SemanticError(ln.number, "'!$omp do' outside of a parallel region");
      ClauseSet cs = parse_clauses(c, false);
      ++pos_;
      ParallelLoop pl;
      pl.loc = loc;
      pl.in_region = true;
      pl.clauses = std::move(cs);
      SeqLoop body = parse_loop(true);
      pl.counter = std::move(body.counter);
      pl.start = std::move(body.start);
      pl.end = std::move(body.end);
      pl.stride = std::move(body.stride);
      pl.body = std::move(body.body);
      skip_optional_end_pragma({"do"});
      return Stmt{std::move(pl)};
    }
    c.fail("unsupported OpenMP directive");
  }

  Stmt parse_code_stmt(bool in_region) {
    const Line& ln = cur();
    TokenCursor c(ln.tokens, ln.number);
    SourceLoc loc{ln.number, c.peek().column};
    if (c.is_word("do")) {
      SeqLoop loop = parse_do_header(ln);
      ++pos_;
      Terminator term;
      loop.body = parse_block(term, in_region);
      if (term.kind != Terminator::EndDo) throw SyntaxError(term.line, 1, "expected 'end do'");
      return Stmt{std::move(loop)};
    }
    if (c.accept_word("if")) {
      If stmt;
      stmt.loc = loc;
      c.expect_op("(");
      ExprParser ep(c);
      stmt.cond = ep.parse();
      c.expect_op(")");
      c.expect_word("then");
      c.expect_end();
      ++pos_;
      Terminator term;
      stmt.then_body = parse_block(term, in_region);
      if (term.kind == Terminator::Else) {
        stmt.else_body = parse_block(term, in_region);
      }
      if (term.kind != Terminator::EndIf) throw SyntaxError(term.line, 1, "expected 'end if'");
      return Stmt{std::move(stmt)};
    }
    if (c.accept_word("call")) {
      CallStmt call;
      call.loc = loc;
      call.name = c.expect_ident();
      if (!is_runtime_call(call.name))
        throw SemanticError(ln.number, "call to unknown routine '" + call.name +
                                           "' (only runtime entry points may be called)");
      c.expect_op("(");
      ExprParser ep(c);
      if (!c.is_op(")")) {
        call.args.push_back(ep.parse());
        while (c.accept_op(",")) call.args.push_back(ep.parse());
      }
      c.expect_op(")");
      c.expect_end();
      ++pos_;
      return Stmt{std::move(call)};
    }
    if (c.is_word("real") || c.is_word("integer"))
      throw SyntaxError(ln.number, loc.column, "declarations must precede executable statements");
    ExprParser ep(c);
    Ref lhs = ep.parse_ref();
    if (c.accept_op("=")) {
      Expr rhs = ep.parse();
      c.expect_end();
      ++pos_;
      return Stmt{Assign{std::move(lhs), std::move(rhs), loc}};
    }
    if (c.accept_op("+=")) {
      Expr rhs = ep.parse();
      c.expect_end();
      ++pos_;
      return Stmt{Increment{std::move(lhs), std::move(rhs), false, loc}};
    }
    c.fail("expected '=' or '+='");
  }

  std::optional<Terminator::Kind> terminator_of(const Line& ln) const {
    TokenCursor c(ln.tokens, ln.number);
    if (ln.kind == LineKind::Omp) {
      if (c.accept_word("end") && c.accept_word("parallel") && c.at_end()) return Terminator::EndParallel;
      return std::nullopt;
    }
    if (ln.kind != LineKind::Code) return std::nullopt;
    if (c.accept_word("enddo") && c.at_end()) return Terminator::EndDo;
    if (c.accept_word("endif") && c.at_end()) return Terminator::EndIf;
    if (c.accept_word("else") && c.at_end()) return Terminator::Else;
    TokenCursor d(ln.tokens, ln.number);
    if (d.accept_word("end")) {
      if (d.at_end()) return Terminator::EndRoutine;
      if (d.accept_word("do") && d.at_end()) return Terminator::EndDo;
      TokenCursor e(ln.tokens, ln.number);
      e.next();
      if (e.accept_word("if") && e.at_end()) return Terminator::EndIf;
      TokenCursor f(ln.tokens, ln.number);
      f.next();
      if (f.accept_word("subroutine") || f.accept_word("program")) {
        if (f.peek().kind == Tok::Ident) f.next();
        if (f.at_end()) return Terminator::EndRoutine;
      }
    }
    return std::nullopt;
  }

  std::vector<Stmt> parse_block(Terminator& term, bool in_region) {
    std::vector<Stmt> body;
    while (pos_ < lines_.size()) {
      const Line& ln = cur();
      if (auto t = terminator_of(ln)) {
        if (have_override_) throw SemanticError(ln.number, "'!$ad omp_adjoint' must precede '!$omp parallel do'");
        term = Terminator{*t, ln.number};
        ++pos_;
        return body;
      }
      if (ln.kind == LineKind::Ad) {
        TokenCursor c(ln.tokens, ln.number);
        if (!c.accept_word("omp_adjoint")) c.fail("expected 'omp_adjoint'");
        if (have_override_) throw SemanticError(ln.number, "duplicate '!$ad omp_adjoint' line");
        pending_override_ = parse_clauses(c, true).ad_override;
        have_override_ = true;
        ++pos_;
        if (pos_ >= lines_.size() || cur().kind != LineKind::Omp)
          throw SemanticError(ln.number, "'!$ad omp_adjoint' must precede '!$omp parallel do'");
        TokenCursor n(cur().tokens, cur().number);
        if (!(n.accept_word("parallel") && n.accept_word("do")))
          throw SemanticError(ln.number, "'!$ad omp_adjoint' must precede '!$omp parallel do'");
        continue;
      }
      if (ln.kind == LineKind::Omp) {
        body.push_back(parse_omp(in_region));
      } else {
        body.push_back(parse_code_stmt(in_region));
      }
    }
    int last = lines_.empty() ? 1 : lines_.back().number;
    term = Terminator{Terminator::EndOfInput, last};
    return body;
  }

  std::vector<Line> lines_;
  std::size_t pos_ = 0;
  std::map<std::string, OverrideScope> pending_override_;
  bool have_override_ = false;
};

}  // namespace

bool is_runtime_call(std::string_view name) {
  static const char* names[] = {"push_real8",          "pop_real8",
                                "push_integer4",       "pop_integer4",
                                "push_integer8",       "pop_integer8",
                                "save_top",            "restore_top",
                                "get_static_schedule", "init_dynamic_schedule",
                                "record_dynamic_schedule", "finalize_dynamic_schedule",
                                "atomic_add"};
  return std::any_of(std::begin(names), std::end(names), [&](const char* n) { return name == n; });
}

Program parse(std::string_view source, bool omp_enabled) {
  Parser parser(split_lines(source, omp_enabled));
  Program prog = parser.parse_program();
  validate(prog);
  return prog;
}

}  // namespace adomp
