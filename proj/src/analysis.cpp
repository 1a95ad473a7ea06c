// SPDX-License-Identifier: Apache-2.0
#include "adomp/analysis.hpp"

#include <algorithm>
#include <sstream>

#include "adomp/frontend.hpp"

namespace adomp {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

class CfgBuilder {
 public:
  explicit CfgBuilder(Cfg& cfg) : cfg_(cfg) {}

  void build(const std::vector<Stmt>& body) {
    for (const auto& s : body) add(s);
  }

 private:
  int open(BlockKind kind) {
    CfgBlock b;
    b.id = static_cast<int>(cfg_.blocks.size());
    b.kind = kind;
    b.region = region_;
    for (int p : preds_) cfg_.blocks[p].successors.push_back(b.id);
    cfg_.blocks.push_back(std::move(b));
    if (region_ >= 0) cfg_.regions[region_].blocks.push_back(cfg_.blocks.back().id);
    preds_ = {cfg_.blocks.back().id};
    return cfg_.blocks.back().id;
  }

  void add(const Stmt& s) {
    std::visit(Overloaded{
                   [&](const SeqLoop& l) { loop(s, BlockKind::LoopHeader, l.counter, nullptr, l.body); },
                   [&](const ParallelLoop& l) {
                     if (l.in_region) {
                       loop(s, BlockKind::LoopHeader, l.counter, nullptr, l.body);
                     } else {
                       loop(s, BlockKind::ParallelHeader, l.counter, &l.clauses, l.body);
                     }
                   },
                   [&](const ParallelRegion& r) { loop(s, BlockKind::ParallelHeader, "", &r.clauses, r.body); },
                   [&](const If& i) { branch(s, i); },
                   [&](const auto&) {
                     if (current_ < 0) current_ = open(BlockKind::Plain);
                     cfg_.blocks[current_].stmts.push_back(&s);
                   },
               },
               s.node);
  }

  void loop(const Stmt& s, BlockKind kind, const std::string& counter, const ClauseSet* clauses,
            const std::vector<Stmt>& body) {
    int outer_region = region_;
    int h = open(kind);
    cfg_.blocks[h].stmts.push_back(&s);
    cfg_.blocks[h].label = counter;
    cfg_.blocks[h].clauses = clauses;
    if (kind == BlockKind::ParallelHeader) {
      RegionInfo r;
      r.id = static_cast<int>(cfg_.regions.size());
      r.header = h;
      r.clauses = clauses;
      r.counter = counter;
      r.stmt = &s;
      region_ = r.id;
      cfg_.regions.push_back(std::move(r));
    }
    current_ = -1;
    build(body);
    for (int p : preds_) cfg_.blocks[p].successors.push_back(h);
    region_ = outer_region;
    preds_ = {h};
    current_ = -1;
  }

  void branch(const Stmt& s, const If& i) {
    int b = open(BlockKind::Branch);
    cfg_.blocks[b].stmts.push_back(&s);
    std::vector<int> exits;
    for (const auto* arm : {&i.then_body, &i.else_body}) {
      preds_ = {b};
      current_ = -1;
      build(*arm);
      exits.insert(exits.end(), preds_.begin(), preds_.end());
    }
    preds_ = exits;
    open(BlockKind::Join);
    current_ = -1;
  }

  Cfg& cfg_;
  std::vector<int> preds_;
  int current_ = -1;
  int region_ = -1;
};

// Visits every Ref of a statement list together with how it is accessed.
struct AccessWalker {
  struct Site {
    const Ref* ref;
    AccessKind kind;
    bool atomic;
    int line;
    const std::string* counter;  // enclosing worksharing counter, if any
  };

  std::vector<Site> sites;
  std::vector<std::string> assigned;

  void reads(const Expr& e, int line) {
    std::vector<const Ref*> refs;
    collect_refs(e, refs);
    for (const auto* r : refs) sites.push_back({r, AccessKind::Read, false, line, counter_});
  }
  void target(const Ref& r, AccessKind kind, bool atomic, int line) {
    if (r.index) reads(*r.index, line);
    sites.push_back({&r, kind, atomic, line, counter_});
    assigned.push_back(r.name);
  }

  void walk(const std::vector<Stmt>& body) {
    for (const auto& s : body) walk(s);
  }

  void walk(const RegionInfo& r) {
    if (const auto* l = std::get_if<ParallelLoop>(&r.stmt->node)) {
      counter_ = &l->counter;
      walk(l->body);
      counter_ = nullptr;
    } else {
      walk(std::get<ParallelRegion>(r.stmt->node).body);
    }
  }

  void walk(const Stmt& s) {
    std::visit(Overloaded{
                   [&](const Assign& a) {
                     reads(a.rhs, a.loc.line);
                     target(a.lhs, AccessKind::Write, false, a.loc.line);
                   },
                   [&](const Increment& a) {
                     reads(a.rhs, a.loc.line);
                     target(a.lhs, AccessKind::Increment, a.atomic, a.loc.line);
                   },
                   [&](const SeqLoop& l) {
                     bounds(l.start, l.end, l.stride, l.loc.line);
                     assigned.push_back(l.counter);
                     walk(l.body);
                   },
                   [&](const ParallelLoop& l) {
                     bounds(l.start, l.end, l.stride, l.loc.line);
                     const std::string* outer = counter_;
                     counter_ = &l.counter;
                     walk(l.body);
                     counter_ = outer;
                   },
                   [&](const ParallelRegion& r) { walk(r.body); },
                   [&](const If& i) {
                     reads(i.cond, i.loc.line);
                     walk(i.then_body);
                     walk(i.else_body);
                   },
                   [&](const CallStmt& c) { call(c); },
               },
               s.node);
  }

  void bounds(const Expr& a, const Expr& b, const Expr& c, int line) {
    reads(a, line);
    reads(b, line);
    reads(c, line);
  }

  void call(const CallStmt& c) {
    auto kind_of = [&](std::size_t i) -> std::optional<AccessKind> {
      bool pop = c.name.rfind("pop_", 0) == 0 || c.name == "restore_top";
      if ((pop && i == 0) || (c.name == "get_static_schedule" && i >= 3)) return AccessKind::Write;
      if (c.name == "atomic_add" && i == 0) return AccessKind::Increment;
      return std::nullopt;
    };
    for (std::size_t i = 0; i < c.args.size(); ++i) {
      const auto* r = std::get_if<Ref>(&c.args[i].node);
      auto k = kind_of(i);
      if (r && k) {
        target(*r, *k, c.name == "atomic_add", c.loc.line);
      } else {
        reads(c.args[i], c.loc.line);
      }
    }
  }

 private:
  const std::string* counter_ = nullptr;
};

bool mentions_any(const Expr& e, const std::vector<std::string>& names) {
  return std::any_of(names.begin(), names.end(), [&](const std::string& n) { return references(e, n); });
}

AffineIndex scaled(AffineIndex a, std::int64_t k) {
  a.coefficient *= k;
  a.constant *= k;
  for (auto it = a.terms.begin(); it != a.terms.end();) {
    it->second *= k;
    it = it->second == 0 ? a.terms.erase(it) : std::next(it);
  }
  return a;
}

AffineIndex sum(AffineIndex a, const AffineIndex& b) {
  a.coefficient += b.coefficient;
  a.constant += b.constant;
  for (const auto& [name, k] : b.terms) {
    if ((a.terms[name] += k) == 0) a.terms.erase(name);
  }
  return a;
}

bool is_constant(const AffineIndex& a) { return a.coefficient == 0 && a.terms.empty(); }

const char* kind_name(AccessKind k, bool atomic) {
  switch (k) {
    case AccessKind::Read: return "read";
    case AccessKind::Write: return "write";
    case AccessKind::Increment: return atomic ? "atomic increment" : "increment";
  }
  return "";
}

}  // namespace

Cfg build_cfg(const Program& program) {
  Cfg cfg;
  cfg.program = &program;
  CfgBuilder(cfg).build(program.body);
  return cfg;
}

Cfg propagate_scoping(Cfg cfg) {
  for (const auto& r : cfg.regions) {
    AccessWalker w;
    w.walk(r);
    for (const auto& site : w.sites) {
      cfg.ref_scope[site.ref] = r.clauses->scope_of(site.ref->name).value_or(Scope::Shared);
    }
  }
  return cfg;
}

std::string to_string(AccessPattern p) {
  switch (p) {
    case AccessPattern::NotAccessed: return "not_accessed";
    case AccessPattern::ExclusiveSingleThread: return "exclusive_single_thread";
    case AccessPattern::ReadOnly: return "read_only";
    case AccessPattern::AtomicIncrementOnly: return "atomic_increment_only";
    case AccessPattern::MixedUnprovable: return "mixed_unprovable";
  }
  return "";
}

std::optional<AffineIndex> affine_in(const Expr& index, const std::string& counter,
                                     const std::vector<std::string>& variant) {
  using Result = std::optional<AffineIndex>;
  auto opaque = [&](const Expr& e) -> Result {
    if (references(e, counter) || mentions_any(e, variant)) return std::nullopt;
    AffineIndex a;
    a.terms[emit(e)] = 1;
    return a;
  };
  return std::visit(Overloaded{
                        [&](const IntLit& k) -> Result { return AffineIndex{0, k.value, {}}; },
                        [&](const RealLit&) -> Result { return std::nullopt; },
                        [&](const Ref& r) -> Result {
                          if (r.index) return opaque(index);
                          if (r.name == counter) return AffineIndex{1, 0, {}};
                          if (std::find(variant.begin(), variant.end(), r.name) != variant.end()) return std::nullopt;
                          return AffineIndex{0, 0, {{r.name, 1}}};
                        },
                        [&](const Unary& u) -> Result {
                          if (u.op != UnaryOp::Neg) return std::nullopt;
                          auto a = affine_in(*u.operand, counter, variant);
                          if (!a) return std::nullopt;
                          return scaled(*a, -1);
                        },
                        [&](const Binary& b) -> Result {
                          if (b.op != BinaryOp::Add && b.op != BinaryOp::Sub && b.op != BinaryOp::Mul) {
                            return opaque(index);
                          }
                          auto l = affine_in(*b.lhs, counter, variant);
                          auto r = affine_in(*b.rhs, counter, variant);
                          if (!l || !r) return std::nullopt;
                          if (b.op == BinaryOp::Add) return sum(*l, *r);
                          if (b.op == BinaryOp::Sub) return sum(*l, scaled(*r, -1));
                          if (is_constant(*l)) return scaled(*r, l->constant);
                          if (is_constant(*r)) return scaled(*l, r->constant);
                          return opaque(index);
                        },
                        [&](const IntrinsicCall&) -> Result { return opaque(index); },
                    },
                    index.node);
}

AccessSummary classify_access(const Cfg& cfg, int region, const std::string& var) {
  const RegionInfo& r = cfg.regions.at(static_cast<std::size_t>(region));
  AccessWalker w;
  w.walk(r);
  std::vector<const AccessWalker::Site*> sites;
  for (const auto& s : w.sites)
    if (s.ref->name == var) sites.push_back(&s);

  AccessSummary out;
  out.region = region;
  out.variable = var;
  std::ostringstream why;
  auto describe = [&](const AccessWalker::Site& s) {
    why << kind_name(s.kind, s.atomic) << " at line " << s.line;
    if (s.ref->index) why << " index " << emit(*s.ref->index);
  };

  if (sites.empty()) {
    out.pattern = AccessPattern::NotAccessed;
    out.justification = "no access in region";
    return out;
  }
  if (std::all_of(sites.begin(), sites.end(),
                  [](const auto* s) { return s->kind == AccessKind::Increment && s->atomic; })) {
    out.pattern = AccessPattern::AtomicIncrementOnly;
    why << sites.size() << " atomic increment(s)";
    out.justification = why.str();
    return out;
  }

  const VarDecl* decl = cfg.program->find(var);
  std::string exclusive_failure;
  if (decl && decl->is_array()) {
    std::optional<AffineIndex> form;
    for (const auto* s : sites) {
      std::optional<AffineIndex> a;
      if (s->counter) a = affine_in(*s->ref->index, *s->counter, w.assigned);
      if (!s->counter) {
        exclusive_failure = "outside any worksharing loop";
      } else if (!a || a->coefficient == 0) {
        exclusive_failure = "not affine in " + *s->counter;
      } else if (form && !(*form == *a)) {
        exclusive_failure = "differs from the first index form";
      } else {
        form = a;
        continue;
      }
      std::ostringstream f;
      f << kind_name(s->kind, s->atomic) << " at line " << s->line << " index " << emit(*s->ref->index) << " "
        << exclusive_failure;
      exclusive_failure = f.str();
      break;
    }
    if (exclusive_failure.empty()) {
      out.pattern = AccessPattern::ExclusiveSingleThread;
      why << sites.size() << " access(es), all at index " << emit(*sites.front()->ref->index) << " with counter "
          << *sites.front()->counter;
      out.justification = why.str();
      return out;
    }
  } else {
    exclusive_failure = "scalar";
  }

  auto writer = std::find_if(sites.begin(), sites.end(), [](const auto* s) { return s->kind != AccessKind::Read; });
  if (writer == sites.end()) {
    out.pattern = AccessPattern::ReadOnly;
    why << sites.size() << " read(s); not exclusive: " << exclusive_failure;
    out.justification = why.str();
    return out;
  }
  out.pattern = AccessPattern::MixedUnprovable;
  describe(**writer);
  why << "; not exclusive: " << exclusive_failure;
  out.justification = why.str();
  return out;
}

std::vector<AccessSummary> summarize(const Cfg& cfg) {
  std::vector<AccessSummary> out;
  for (const auto& r : cfg.regions) {
    for (const auto& [name, entry] : r.clauses->scoping) {
      if (entry.scope == Scope::Shared) out.push_back(classify_access(cfg, r.id, name));
    }
  }
  return out;
}

bool has_dependency(AccessKind first, AccessKind second) {
  if (first == AccessKind::Read && second == AccessKind::Read) return false;
  if (first == AccessKind::Increment && second == AccessKind::Increment) return false;
  return true;
}

}  // namespace adomp
