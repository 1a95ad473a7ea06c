// SPDX-License-Identifier: Apache-2.0
#include "adomp/executor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

#include "adomp/frontend.hpp"
#include "adomp/runtime.hpp"

namespace adomp {

int default_thread_count(int fallback) {
  if (const char* env = std::getenv("ADOMP_NUM_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return fallback;
}

namespace {

// ---------------------------------------------------------------------------
// Worker team

struct TeamAborted {};

/// Fixed set of worker threads with stable ids. A team of one runs tasks on
/// the calling thread.
class Team {
 public:
  explicit Team(int n) : n_(n) {
    if (n_ > 1)
      for (int t = 0; t < n_; ++t) threads_.emplace_back([this, t] { worker(t); });
  }
  ~Team() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }
  Team(const Team&) = delete;
  Team& operator=(const Team&) = delete;

  int size() const { return n_; }

  void run(const std::function<void(int)>& task) {
    if (n_ == 1) {
      task(0);
      return;
    }
    std::unique_lock lock(mu_);
    task_ = &task;
    pending_ = n_;
    error_ = nullptr;
    aborted_ = false;
    arrived_ = 0;
    ++generation_;
    cv_.notify_all();
    done_cv_.wait(lock, [&] { return pending_ == 0; });
    task_ = nullptr;
    if (error_) std::rethrow_exception(error_);
  }

  void barrier() {
    if (n_ == 1) return;
    std::unique_lock lock(mu_);
    if (aborted_) throw TeamAborted{};
    std::uint64_t phase = barrier_phase_;
    if (++arrived_ == n_) {
      arrived_ = 0;
      ++barrier_phase_;
      barrier_cv_.notify_all();
      return;
    }
    barrier_cv_.wait(lock, [&] { return barrier_phase_ != phase || aborted_; });
    if (barrier_phase_ == phase) throw TeamAborted{};
  }

 private:
  void worker(int tid) {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(int)>* task;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        task = task_;
      }
      try {
        (*task)(tid);
      } catch (const TeamAborted&) {
      } catch (...) {
        std::lock_guard lock(mu_);
        if (!error_) error_ = std::current_exception();
        aborted_ = true;
        barrier_cv_.notify_all();
      }
      std::lock_guard lock(mu_);
      if (--pending_ == 0) done_cv_.notify_all();
    }
  }

  int n_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_, barrier_cv_;
  const std::function<void(int)>* task_ = nullptr;
  std::uint64_t generation_ = 0;
  std::uint64_t barrier_phase_ = 0;
  int pending_ = 0;
  int arrived_ = 0;
  bool stop_ = false;
  bool aborted_ = false;
  std::exception_ptr error_;
};

// ---------------------------------------------------------------------------
// Compiled program

enum class Op : std::uint8_t {
  RealLit, IntLit, RealVar, IntVar, RealCell,
  Neg, Not, Add, Sub, Mul, Div, Lt, Le, Gt, Ge, Eq, Ne, And, Or,
  Sin, Cos, Exp, Sqrt, Mod, Max, Min,
};

struct Node {
  Op op;
  ValueType type;
  ValueType operand_type = ValueType::Real;  // comparisons: promoted operand type
  int a = -1;
  int b = -1;
  int var = -1;
  int line = 0;
  double r = 0.0;
  std::int64_t i = 0;
};

enum class CallKind {
  PushReal8, PopReal8, PushInteger4, PopInteger4, PushInteger8, PopInteger8, SaveTop, RestoreTop,
  GetStaticSchedule, InitDynamic, RecordDynamic, FinalizeDynamic, AtomicAdd,
};

struct LValue {
  int var = -1;
  int index = -1;  // node id, -1 for scalars
  bool real = true;
};

struct CClauses {
  std::vector<std::pair<int, Scope>> entries;
  Schedule schedule;
};

struct CStmt {
  enum class K { Assign, Incr, Seq, Par, Region, If, Call } k;
  int line = 0;
  LValue lhs;
  int rhs = -1;
  bool atomic = false;
  int counter = -1;
  int start = -1, end = -1, stride = -1;
  std::vector<CStmt> body, else_body;
  CClauses clauses;
  bool in_region = false;
  int cond = -1;
  CallKind call = CallKind::PushReal8;
  std::vector<int> args;
  std::vector<LValue> outs;
  int ordinal = 0;  // in-region loops: position among the region's worksharing loops
};

struct VarInfo {
  std::string name;
  bool real = true;
  std::size_t extent = 1;
  bool array = false;
};

class Compiler {
 public:
  Compiler(const Program& p, std::vector<Node>& nodes, std::vector<VarInfo>& vars)
      : p_(p), nodes_(nodes), vars_(vars) {
    for (std::size_t k = 0; k < p.decls.size(); ++k) ids_[p.decls[k].name] = static_cast<int>(k);
  }

  int var(const std::string& name) const { return ids_.at(name); }

  int expr(const Expr& e, int line) {
    return std::visit(
        [&](const auto& n) -> int {
          using T = std::decay_t<decltype(n)>;
          Node node{};
          node.line = line;
          if constexpr (std::is_same_v<T, RealLit>) {
            node.op = Op::RealLit;
            node.type = ValueType::Real;
            node.r = n.value;
          } else if constexpr (std::is_same_v<T, IntLit>) {
            node.op = Op::IntLit;
            node.type = ValueType::Integer;
            node.i = n.value;
          } else if constexpr (std::is_same_v<T, Ref>) {
            node.var = var(n.name);
            bool real = vars_[node.var].real;
            node.type = real ? ValueType::Real : ValueType::Integer;
            if (n.index) {
              node.op = Op::RealCell;
              node.a = expr(*n.index, line);
            } else {
              node.op = real ? Op::RealVar : Op::IntVar;
            }
          } else if constexpr (std::is_same_v<T, Unary>) {
            node.a = expr(*n.operand, line);
            node.op = n.op == UnaryOp::Neg ? Op::Neg : Op::Not;
            node.type = nodes_[node.a].type;
          } else if constexpr (std::is_same_v<T, Binary>) {
            node.a = expr(*n.lhs, line);
            node.b = expr(*n.rhs, line);
            ValueType ta = nodes_[node.a].type, tb = nodes_[node.b].type;
            node.operand_type = (ta == ValueType::Real || tb == ValueType::Real) ? ValueType::Real : ValueType::Integer;
            static const Op ops[] = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Lt, Op::Le,
                                     Op::Gt,  Op::Ge,  Op::Eq,  Op::Ne,  Op::And, Op::Or};
            node.op = ops[static_cast<int>(n.op)];
            switch (n.op) {
              case BinaryOp::Add:
              case BinaryOp::Sub:
              case BinaryOp::Mul:
              case BinaryOp::Div: node.type = node.operand_type; break;
              default: node.type = ValueType::Logical;
            }
          } else if constexpr (std::is_same_v<T, IntrinsicCall>) {
            static const Op ops[] = {Op::Sin, Op::Cos, Op::Exp, Op::Sqrt, Op::Mod, Op::Max, Op::Min};
            node.op = ops[static_cast<int>(n.fn)];
            node.a = expr(n.args.at(0), line);
            if (n.args.size() > 1) node.b = expr(n.args[1], line);
            node.type = node.b >= 0 ? ValueType::Integer : ValueType::Real;
          }
          nodes_.push_back(node);
          return static_cast<int>(nodes_.size() - 1);
        },
        e.node);
  }

  LValue lvalue(const Ref& r, int line) {
    LValue lv;
    lv.var = var(r.name);
    lv.real = vars_[lv.var].real;
    if (r.index) lv.index = expr(*r.index, line);
    return lv;
  }

  CClauses clauses(const ClauseSet& cs) {
    CClauses out;
    for (const auto& [v, e] : cs.scoping) out.entries.emplace_back(var(v), e.scope);
    out.schedule = cs.schedule;
    return out;
  }

  std::vector<CStmt> body(const std::vector<Stmt>& stmts) {
    std::vector<CStmt> out;
    for (const auto& s : stmts) out.push_back(stmt(s));
    return out;
  }

  CStmt stmt(const Stmt& s) {
    CStmt c{};
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          c.line = n.loc.line;
          if constexpr (std::is_same_v<T, Assign> || std::is_same_v<T, Increment>) {
            c.k = std::is_same_v<T, Assign> ? CStmt::K::Assign : CStmt::K::Incr;
            c.lhs = lvalue(n.lhs, c.line);
            c.rhs = expr(n.rhs, c.line);
            if constexpr (std::is_same_v<T, Increment>) c.atomic = n.atomic;
          } else if constexpr (std::is_same_v<T, SeqLoop> || std::is_same_v<T, ParallelLoop>) {
            c.counter = var(n.counter);
            c.start = expr(n.start, c.line);
            c.end = expr(n.end, c.line);
            c.stride = expr(n.stride, c.line);
            if constexpr (std::is_same_v<T, SeqLoop>) {
              c.k = CStmt::K::Seq;
            } else {
              c.k = CStmt::K::Par;
              c.clauses = clauses(n.clauses);
              c.in_region = n.in_region;
              if (n.in_region) c.ordinal = region_loops_++;
            }
            c.body = body(n.body);
          } else if constexpr (std::is_same_v<T, ParallelRegion>) {
            c.k = CStmt::K::Region;
            c.clauses = clauses(n.clauses);
            int saved = region_loops_;
            region_loops_ = 0;
            c.body = body(n.body);
            c.ordinal = region_loops_;
            region_loops_ = saved;
          } else if constexpr (std::is_same_v<T, If>) {
            c.k = CStmt::K::If;
            c.cond = expr(n.cond, c.line);
            c.body = body(n.then_body);
            c.else_body = body(n.else_body);
          } else if constexpr (std::is_same_v<T, CallStmt>) {
            c.k = CStmt::K::Call;
            compile_call(n, c);
          }
        },
        s.node);
    return c;
  }

 private:
  void compile_call(const CallStmt& n, CStmt& c) {
    static const std::pair<const char*, CallKind> table[] = {
        {"push_real8", CallKind::PushReal8},
        {"pop_real8", CallKind::PopReal8},
        {"push_integer4", CallKind::PushInteger4},
        {"pop_integer4", CallKind::PopInteger4},
        {"push_integer8", CallKind::PushInteger8},
        {"pop_integer8", CallKind::PopInteger8},
        {"save_top", CallKind::SaveTop},
        {"restore_top", CallKind::RestoreTop},
        {"get_static_schedule", CallKind::GetStaticSchedule},
        {"init_dynamic_schedule", CallKind::InitDynamic},
        {"record_dynamic_schedule", CallKind::RecordDynamic},
        {"finalize_dynamic_schedule", CallKind::FinalizeDynamic},
        {"atomic_add", CallKind::AtomicAdd},
    };
    for (auto [name, kind] : table)
      if (n.name == name) c.call = kind;
    auto out_ref = [&](std::size_t k) { return lvalue(std::get<Ref>(n.args.at(k).node), c.line); };
    switch (c.call) {
      case CallKind::PopReal8:
      case CallKind::PopInteger4:
      case CallKind::PopInteger8:
      case CallKind::SaveTop: c.outs.push_back(out_ref(0)); break;
      case CallKind::GetStaticSchedule:
        for (std::size_t k = 0; k < 3; ++k) c.args.push_back(expr(n.args[k], c.line));
        c.outs.push_back(out_ref(3));
        c.outs.push_back(out_ref(4));
        break;
      case CallKind::AtomicAdd:
        c.outs.push_back(out_ref(0));
        c.args.push_back(expr(n.args[1], c.line));
        break;
      default:
        for (const auto& a : n.args) c.args.push_back(expr(a, c.line));
    }
  }

  const Program& p_;
  std::vector<Node>& nodes_;
  std::vector<VarInfo>& vars_;
  std::map<std::string, int> ids_;
  int region_loops_ = 0;
};

// ---------------------------------------------------------------------------
// Execution state

struct ThreadState {
  explicit ThreadState(int tid, int nthreads) : rt(tid, nthreads) {}
  ThreadRuntime rt;
  std::vector<TapeStack::Snapshot> snapshots;
};

/// Variable bindings seen by one thread.
struct Frame {
  std::vector<double*> reals;
  std::vector<std::int64_t*> ints;
  ThreadState* ts = nullptr;
  int tid = 0;
  int team_size = 1;
};

/// Iteration distribution for one worksharing-loop instance.
class LoopDispatch {
 public:
  LoopDispatch(std::int64_t n, int nthreads, const Schedule& sched, std::int64_t default_chunk,
               std::optional<std::uint64_t> perturb_seed)
      : n_(n), nthreads_(nthreads), kind_(sched.kind) {
    chunk_ = sched.chunk.value_or(kind_ == ScheduleKind::Dynamic ? default_chunk : 0);
    if (kind_ == ScheduleKind::Dynamic && perturb_seed) {
      std::mt19937_64 rng(*perturb_seed ^ static_cast<std::uint64_t>(n) * 0x9e3779b97f4a7c15ULL);
      std::int64_t nchunks = (n + chunk_ - 1) / chunk_;
      owner_.resize(static_cast<std::size_t>(nchunks));
      for (auto& o : owner_) o = static_cast<int>(rng() % static_cast<std::uint64_t>(nthreads));
      perturbed_ = true;
    }
  }

  /// Calls fn(first, count) for each block of logical iterations owned by tid, in increasing order.
  template <class Fn>
  void for_each_block(int tid, Fn&& fn) {
    if (kind_ == ScheduleKind::Dynamic) {
      if (perturbed_) {
        for (std::size_t c = 0; c < owner_.size(); ++c)
          if (owner_[c] == tid) {
            std::int64_t first = static_cast<std::int64_t>(c) * chunk_;
            fn(first, std::min(chunk_, n_ - first));
          }
        return;
      }
      for (;;) {
        std::int64_t first = next_.fetch_add(chunk_);
        if (first >= n_) return;
        fn(first, std::min(chunk_, n_ - first));
      }
    }
    if (chunk_ > 0) {
      for (std::int64_t first = static_cast<std::int64_t>(tid) * chunk_; first < n_;
           first += static_cast<std::int64_t>(nthreads_) * chunk_)
        fn(first, std::min(chunk_, n_ - first));
      return;
    }
    auto [cs, ce] = static_schedule(0, n_ - 1, 1, nthreads_, tid);
    if (ce >= cs) fn(cs, ce - cs + 1);
  }

 private:
  std::int64_t n_;
  int nthreads_;
  ScheduleKind kind_;
  std::int64_t chunk_ = 0;
  std::atomic<std::int64_t> next_{0};
  bool perturbed_ = false;
  std::vector<int> owner_;
};

/// Per-thread copies of privatized variables.
struct PrivateStore {
  std::vector<std::vector<double>> reals;
  std::vector<std::int64_t> ints;
};

class Machine {
 public:
  Machine(const Program& program, const ExecOptions& opts) : opts_(opts), team_(opts.nthreads) {
    if (opts.nthreads < 1) throw RuntimeFault("thread count must be at least 1");
    vars_.resize(program.decls.size());
    Compiler comp(program, nodes_, vars_);
    for (std::size_t k = 0; k < program.decls.size(); ++k) {
      const auto& d = program.decls[k];
      vars_[k].name = d.name;
      vars_[k].real = d.type == BaseType::Real;
      vars_[k].array = d.is_array();
    }
    body_ = comp.body(program.body);
    extent_nodes_.resize(program.decls.size(), -1);
    for (std::size_t k = 0; k < program.decls.size(); ++k)
      if (program.decls[k].extent) extent_nodes_[k] = comp.expr(*program.decls[k].extent, program.decls[k].loc.line);
    serial_ = std::make_unique<ThreadState>(0, 1);
    for (int t = 0; t < opts.nthreads; ++t) workers_.push_back(std::make_unique<ThreadState>(t, opts.nthreads));
    serial_->rt.tape.enable_pairing_check(opts.pairing_check);
    for (auto& w : workers_) w->rt.tape.enable_pairing_check(opts.pairing_check);
  }

  ExecResult run(const Program& program, const Bindings& inputs) {
    std::size_t nv = vars_.size();
    real_store_.assign(nv, {});
    int_store_.assign(nv, 0);
    Frame frame;
    frame.reals.assign(nv, nullptr);
    frame.ints.assign(nv, nullptr);
    frame.ts = serial_.get();
    // integer scalars first so that extents can be evaluated
    for (std::size_t k = 0; k < nv; ++k) {
      const auto& d = program.decls[k];
      if (vars_[k].real) continue;
      frame.ints[k] = &int_store_[k];
      if (d.intent == Intent::In || d.intent == Intent::InOut) {
        auto it = inputs.ints.find(d.name);
        if (it == inputs.ints.end()) throw RuntimeFault("missing input '" + d.name + "'");
        int_store_[k] = it->second;
      }
    }
    for (std::size_t k = 0; k < nv; ++k) {
      const auto& d = program.decls[k];
      if (!vars_[k].real) continue;
      std::size_t extent = 1;
      if (extent_nodes_[k] >= 0) {
        std::int64_t e = eval_int(extent_nodes_[k], frame);
        if (e <= 0) throw RuntimeFault("extent of '" + d.name + "' evaluates to " + std::to_string(e));
        extent = static_cast<std::size_t>(e);
      }
      vars_[k].extent = extent;
      real_store_[k].assign(extent, 0.0);
      if (d.intent == Intent::In || d.intent == Intent::InOut) {
        auto it = inputs.reals.find(d.name);
        if (it == inputs.reals.end()) throw RuntimeFault("missing input '" + d.name + "'");
        if (it->second.size() != extent)
          throw RuntimeFault("input '" + d.name + "' has " + std::to_string(it->second.size()) +
                             " values, expected " + std::to_string(extent));
        real_store_[k] = it->second;
      }
      frame.reals[k] = real_store_[k].data();
    }

    exec_body(body_, frame);

    ExecResult res;
    for (std::size_t k = 0; k < nv; ++k) {
      const auto& d = program.decls[k];
      if (!d.is_param()) continue;
      if (vars_[k].real)
        res.values.reals[d.name] = real_store_[k];
      else
        res.values.ints[d.name] = int_store_[k];
    }
    res.tape_depths.push_back(serial_->rt.tape.depth());
    for (auto& w : workers_) res.tape_depths.push_back(w->rt.tape.depth());
    return res;
  }

 private:
  // --- expressions -------------------------------------------------------

  [[noreturn]] void out_of_bounds(const Node& n, std::int64_t idx) const {
    throw RuntimeFault("line " + std::to_string(n.line) + ": index " + std::to_string(idx) + " of '" +
                       vars_[n.var].name + "' outside 1.." + std::to_string(vars_[n.var].extent));
  }

  double& cell(int var, std::int64_t idx, const Node& at, const Frame& f) const {
    if (idx < 1 || static_cast<std::size_t>(idx) > vars_[var].extent) out_of_bounds(at, idx);
    return f.reals[var][idx - 1];
  }

  double eval_real(int id, const Frame& f) const {
    const Node& n = nodes_[id];
    if (n.type == ValueType::Integer) return static_cast<double>(eval_int(id, f));
    switch (n.op) {
      case Op::RealLit: return n.r;
      case Op::RealVar: return *f.reals[n.var];
      case Op::RealCell: return cell(n.var, eval_int(n.a, f), n, f);
      case Op::Neg: return -eval_real(n.a, f);
      case Op::Add: return eval_real(n.a, f) + eval_real(n.b, f);
      case Op::Sub: return eval_real(n.a, f) - eval_real(n.b, f);
      case Op::Mul: return eval_real(n.a, f) * eval_real(n.b, f);
      case Op::Div: return eval_real(n.a, f) / eval_real(n.b, f);
      case Op::Sin: return std::sin(eval_real(n.a, f));
      case Op::Cos: return std::cos(eval_real(n.a, f));
      case Op::Exp: return std::exp(eval_real(n.a, f));
      case Op::Sqrt: return std::sqrt(eval_real(n.a, f));
      default: throw RuntimeFault("internal: bad real expression");
    }
  }

  std::int64_t eval_int(int id, const Frame& f) const {
    const Node& n = nodes_[id];
    switch (n.op) {
      case Op::IntLit: return n.i;
      case Op::IntVar: return *f.ints[n.var];
      case Op::Neg: return -eval_int(n.a, f);
      case Op::Add: return eval_int(n.a, f) + eval_int(n.b, f);
      case Op::Sub: return eval_int(n.a, f) - eval_int(n.b, f);
      case Op::Mul: return eval_int(n.a, f) * eval_int(n.b, f);
      case Op::Div:
      case Op::Mod: {
        std::int64_t a = eval_int(n.a, f), b = eval_int(n.b, f);
        if (b == 0) throw RuntimeFault("line " + std::to_string(n.line) + ": integer division by zero");
        return n.op == Op::Div ? a / b : a % b;
      }
      case Op::Max: return std::max(eval_int(n.a, f), eval_int(n.b, f));
      case Op::Min: return std::min(eval_int(n.a, f), eval_int(n.b, f));
      default: throw RuntimeFault("internal: bad integer expression");
    }
  }

  bool eval_bool(int id, const Frame& f) const {
    const Node& n = nodes_[id];
    switch (n.op) {
      case Op::Not: return !eval_bool(n.a, f);
      case Op::And: return eval_bool(n.a, f) && eval_bool(n.b, f);
      case Op::Or: return eval_bool(n.a, f) || eval_bool(n.b, f);
      default: break;
    }
    if (n.operand_type == ValueType::Integer) {
      std::int64_t a = eval_int(n.a, f), b = eval_int(n.b, f);
      switch (n.op) {
        case Op::Lt: return a < b;
        case Op::Le: return a <= b;
        case Op::Gt: return a > b;
        case Op::Ge: return a >= b;
        case Op::Eq: return a == b;
        case Op::Ne: return a != b;
        default: break;
      }
    } else {
      double a = eval_real(n.a, f), b = eval_real(n.b, f);
      switch (n.op) {
        case Op::Lt: return a < b;
        case Op::Le: return a <= b;
        case Op::Gt: return a > b;
        case Op::Ge: return a >= b;
        case Op::Eq: return a == b;
        case Op::Ne: return a != b;
        default: break;
      }
    }
    throw RuntimeFault("internal: bad logical expression");
  }

  double& real_lvalue(const LValue& lv, const Frame& f, int line) const {
    if (lv.index < 0) return *f.reals[lv.var];
    std::int64_t idx = eval_int(lv.index, f);
    if (idx < 1 || static_cast<std::size_t>(idx) > vars_[lv.var].extent)
      throw RuntimeFault("line " + std::to_string(line) + ": index " + std::to_string(idx) + " of '" +
                         vars_[lv.var].name + "' outside 1.." + std::to_string(vars_[lv.var].extent));
    return f.reals[lv.var][idx - 1];
  }

  // --- statements --------------------------------------------------------

  void exec_body(const std::vector<CStmt>& body, Frame& f) {
    for (const auto& s : body) exec(s, f);
  }

  void exec(const CStmt& s, Frame& f) {
    switch (s.k) {
      case CStmt::K::Assign:
        if (s.lhs.real)
          real_lvalue(s.lhs, f, s.line) = eval_real(s.rhs, f);
        else
          *f.ints[s.lhs.var] = eval_int(s.rhs, f);
        break;
      case CStmt::K::Incr:
        if (s.lhs.real) {
          double d = eval_real(s.rhs, f);
          double& target = real_lvalue(s.lhs, f, s.line);
          if (s.atomic)
            atomic_add(target, d);
          else
            target += d;
        } else {
          *f.ints[s.lhs.var] += eval_int(s.rhs, f);
        }
        break;
      case CStmt::K::Seq: {
        std::int64_t st = eval_int(s.stride, f);
        std::int64_t start = eval_int(s.start, f);
        std::int64_t n = trip_count(start, eval_int(s.end, f), st);
        std::int64_t& i = *f.ints[s.counter];
        for (std::int64_t k = 0; k < n; ++k) {
          i = start + k * st;
          exec_body(s.body, f);
        }
        i = start + n * st;
        break;
      }
      case CStmt::K::If:
        exec_body(eval_bool(s.cond, f) ? s.body : s.else_body, f);
        break;
      case CStmt::K::Call: exec_call(s, f); break;
      case CStmt::K::Par:
        if (s.in_region)
          exec_worksharing(s, f);
        else
          exec_parallel(s, f);
        break;
      case CStmt::K::Region: exec_parallel(s, f); break;
    }
  }

  void exec_call(const CStmt& s, Frame& f) {
    TapeStack& tape = f.ts->rt.tape;
    auto int_out = [&](std::size_t k) -> std::int64_t& { return *f.ints[s.outs[k].var]; };
    switch (s.call) {
      case CallKind::PushReal8: tape.push_real8(eval_real(s.args[0], f)); break;
      case CallKind::PopReal8: real_lvalue(s.outs[0], f, s.line) = tape.pop_real8(); break;
      case CallKind::PushInteger4: tape.push_integer4(eval_int(s.args[0], f)); break;
      case CallKind::PopInteger4: int_out(0) = tape.pop_integer4(); break;
      case CallKind::PushInteger8: tape.push_integer8(eval_int(s.args[0], f)); break;
      case CallKind::PopInteger8: int_out(0) = tape.pop_integer8(); break;
      case CallKind::SaveTop:
        f.ts->snapshots.push_back(tape.save_top());
        int_out(0) = static_cast<std::int64_t>(f.ts->snapshots.size());
        break;
      case CallKind::RestoreTop: {
        std::int64_t h = eval_int(s.args[0], f);
        if (h < 1 || static_cast<std::size_t>(h) > f.ts->snapshots.size())
          throw RuntimeFault("line " + std::to_string(s.line) + ": invalid tape snapshot handle");
        tape.restore_top(f.ts->snapshots[h - 1]);
        break;
      }
      case CallKind::GetStaticSchedule: {
        auto [cs, ce] = static_schedule(eval_int(s.args[0], f), eval_int(s.args[1], f), eval_int(s.args[2], f),
                                        f.team_size, f.tid);
        int_out(0) = cs;
        int_out(1) = ce;
        break;
      }
      case CallKind::InitDynamic: dynamic_init(f.ts->rt.chunks); break;
      case CallKind::RecordDynamic:
        dynamic_record(f.ts->rt.chunks, tape, eval_int(s.args[0], f), eval_int(s.args[1], f));
        break;
      case CallKind::FinalizeDynamic: dynamic_finalize(f.ts->rt.chunks, tape); break;
      case CallKind::AtomicAdd: atomic_add(real_lvalue(s.outs[0], f, s.line), eval_real(s.args[0], f)); break;
    }
  }

  struct RegionState {
    std::mutex mu;
    std::vector<std::unique_ptr<LoopDispatch>> loops;
    std::vector<PrivateStore> privates;
    int last_owner = -1;
  };

  LoopDispatch& dispatch_for(RegionState& region, int ordinal, std::int64_t n, const Schedule& sched) {
    std::lock_guard lock(region.mu);
    auto& slot = region.loops[ordinal];
    if (!slot) slot = std::make_unique<LoopDispatch>(n, opts_.nthreads, effective(sched), opts_.dynamic_chunk,
                                                     opts_.perturb_seed);
    return *slot;
  }

  Schedule effective(const Schedule& s) const { return opts_.schedule_override ? *opts_.schedule_override : s; }

  /// Runs the iterations of a worksharing loop assigned to this thread.
  /// Returns true if this thread executed the logically last iteration.
  bool run_share(const CStmt& s, Frame& f, LoopDispatch& dispatch, std::int64_t start, std::int64_t st,
                 std::int64_t n) {
    bool did_last = false;
    std::int64_t& i = *f.ints[s.counter];
    dispatch.for_each_block(f.tid, [&](std::int64_t first, std::int64_t count) {
      for (std::int64_t k = first; k < first + count; ++k) {
        i = start + k * st;
        exec_body(s.body, f);
      }
      if (first + count == n) did_last = true;
    });
    return did_last;
  }

  void exec_worksharing(const CStmt& s, Frame& f) {
    std::int64_t st = eval_int(s.stride, f);
    std::int64_t start = eval_int(s.start, f);
    std::int64_t n = trip_count(start, eval_int(s.end, f), st);
    LoopDispatch& d = dispatch_for(*region_, s.ordinal, n, s.clauses.schedule);
    run_share(s, f, d, start, st, n);
    team_.barrier();
  }

  Frame private_frame(const CStmt& s, const Frame& global, PrivateStore& store, int tid) {
    Frame f = global;
    f.ts = workers_[tid].get();
    f.tid = tid;
    f.team_size = opts_.nthreads;
    store.reals.assign(s.clauses.entries.size(), {});
    store.ints.assign(s.clauses.entries.size(), 0);
    for (std::size_t k = 0; k < s.clauses.entries.size(); ++k) {
      auto [v, scope] = s.clauses.entries[k];
      if (scope == Scope::Shared) continue;
      bool copy_in = scope == Scope::FirstPrivate;
      if (vars_[v].real) {
        auto& mine = store.reals[k];
        if (copy_in)
          mine.assign(global.reals[v], global.reals[v] + vars_[v].extent);
        else
          mine.assign(vars_[v].extent, 0.0);
        f.reals[v] = mine.data();
      } else {
        store.ints[k] = copy_in ? *global.ints[v] : 0;
        f.ints[v] = &store.ints[k];
      }
    }
    return f;
  }

  void exec_parallel(const CStmt& s, Frame& global) {
    const bool is_loop = s.k == CStmt::K::Par;
    std::int64_t st = 0, start = 0, n = 0;
    std::unique_ptr<LoopDispatch> dispatch;
    if (is_loop) {
      st = eval_int(s.stride, global);
      start = eval_int(s.start, global);
      n = trip_count(start, eval_int(s.end, global), st);
      dispatch = std::make_unique<LoopDispatch>(n, opts_.nthreads, effective(s.clauses.schedule), opts_.dynamic_chunk,
                                                opts_.perturb_seed);
    }
    RegionState region;
    region.loops.resize(is_loop ? 0 : static_cast<std::size_t>(s.ordinal));
    region.privates.resize(static_cast<std::size_t>(opts_.nthreads));
    region_ = &region;
    team_.run([&](int tid) {
      Frame f = private_frame(s, global, region.privates[tid], tid);
      if (is_loop) {
        if (run_share(s, f, *dispatch, start, st, n)) {
          std::lock_guard lock(region.mu);
          region.last_owner = tid;
        }
      } else {
        exec_body(s.body, f);
      }
    });
    region_ = nullptr;
    // reductions in thread order, then lastprivate copy-out
    for (std::size_t k = 0; k < s.clauses.entries.size(); ++k) {
      auto [v, scope] = s.clauses.entries[k];
      if (scope == Scope::ReductionSum) {
        for (int t = 0; t < opts_.nthreads; ++t) {
          if (vars_[v].real) {
            const auto& mine = region.privates[t].reals[k];
            for (std::size_t c = 0; c < mine.size(); ++c) global.reals[v][c] += mine[c];
          } else {
            *global.ints[v] += region.privates[t].ints[k];
          }
        }
      } else if (scope == Scope::LastPrivate && region.last_owner >= 0) {
        const PrivateStore& owner = region.privates[region.last_owner];
        if (vars_[v].real)
          std::copy(owner.reals[k].begin(), owner.reals[k].end(), global.reals[v]);
        else
          *global.ints[v] = owner.ints[k];
      }
    }
  }

  ExecOptions opts_;
  Team team_;
  std::vector<Node> nodes_;
  std::vector<VarInfo> vars_;
  std::vector<int> extent_nodes_;
  std::vector<CStmt> body_;
  std::vector<std::vector<double>> real_store_;
  std::vector<std::int64_t> int_store_;
  std::unique_ptr<ThreadState> serial_;
  std::vector<std::unique_ptr<ThreadState>> workers_;
  RegionState* region_ = nullptr;
};

}  // namespace

ExecResult execute(const Program& program, const Bindings& inputs, const ExecOptions& options) {
  if (options.nthreads < 1) throw RuntimeFault("thread count must be at least 1");
  Machine m(program, options);
  return m.run(program, inputs);
}

ExecResult run_adjoint(const Program& adjoint, const Bindings& inputs,
                       const std::map<std::string, std::vector<double>>& seeds, const ExecOptions& options) {
  Bindings all = inputs;
  for (const auto& d : adjoint.decls) {
    if (!d.is_param() || d.type != BaseType::Real || d.intent == Intent::Out || all.reals.count(d.name)) continue;
    if (d.name.size() > 1 && d.name.back() == 'b') {
      auto it = seeds.find(d.name.substr(0, d.name.size() - 1));
      if (it != seeds.end()) {
        all.reals[d.name] = it->second;
        continue;
      }
    }
    std::size_t extent = 1;
    if (d.extent) {
      // evaluate the extent with a scratch routine over the integer inputs
      std::vector<const Ref*> refs;
      collect_refs(*d.extent, refs);
      Program scratch;
      scratch.name = "extent";
      for (const Ref* r : refs)
        if (const VarDecl* rd = adjoint.find(r->name); rd && !scratch.find(rd->name)) {
          scratch.decls.push_back(*rd);
          scratch.params.push_back(rd->name);
        }
      VarDecl probe{"probe", BaseType::Real, Intent::Out, false, d.extent, {}};
      scratch.decls.push_back(probe);
      scratch.params.push_back(probe.name);
      extent = execute(scratch, all).values.reals.at(probe.name).size();
    }
    all.reals[d.name].assign(extent, 0.0);
  }
  return execute(adjoint, all, options);
}

}  // namespace adomp
