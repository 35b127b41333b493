// SPDX-License-Identifier: Apache-2.0
#include "wbft/netsim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace wbft {

namespace {
constexpr std::uint32_t kSimSender = 0xFFFFFFFFu;
}

struct Simulation::Impl {
  // ------------------------------------------------------------------ events
  struct Event {
    TimeNs at = 0;
    std::uint32_t sender = 0;
    std::uint64_t seq = 0;
    enum class Kind : std::uint8_t { deliver, timer, fault } kind = Kind::deliver;

    ProcessId from = 0;
    ProcessId to = 0;
    std::int8_t world = -1;
    std::shared_ptr<AnyMsg> msg;

    std::uint64_t tag = 0;
    std::uint64_t timer_id = 0;
    std::int8_t timer_world = 0;

    std::size_t fault_index = 0;
    bool heal = false;
  };

  struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
      if (a.at != b.at) return a.at > b.at;
      if (a.sender != b.sender) return a.sender > b.sender;
      return a.seq > b.seq;
    }
  };

  // ------------------------------------------------------------ per process
  class ProcCtx final : public Context {
   public:
    ProcCtx(Impl* sim, ProcessId pid, std::int8_t world) : sim_(sim), pid_(pid), world_(world) {}

    TimeNs now() const override { return sim_->now_; }
    void send(ProcessId to, const AnyMsg& msg) override { sim_->proc_send(pid_, world_, to, msg); }
    void broadcast_replicas(const AnyMsg& msg) override {
      auto shared = std::make_shared<AnyMsg>(msg);
      for (ProcessId r = 0; r < sim_->sc_.n; ++r) sim_->proc_send_shared(pid_, world_, r, shared);
      sim_->sniff(pid_, world_, msg);
    }
    std::uint64_t set_timer(TimeNs delay, std::uint64_t tag) override {
      return sim_->arm_timer(pid_, world_, delay, tag);
    }
    void cancel_timer(std::uint64_t timer_id) override { sim_->cancelled_.insert(timer_id); }
    void timeline(const std::string& event, const std::string& detail) override {
      if (sim_->suppressed(pid_, world_)) return;
      sim_->trace_.timeline.push_back({sim_->now_, event, detail});
    }
    void consensus_decided(Instance instance, TimeNs start, TimeNs decide, bool fast,
                           ReplicaId leader) override {
      if (sim_->suppressed(pid_, world_)) return;
      sim_->trace_.consensus.push_back({instance, start, decide, fast, leader});
    }
    SystemDirectory& directory() override { return sim_->directory_; }
    AnnealResult annealed_config(std::span<const ReplicaId> roster, std::uint32_t t_eff) override {
      return sim_->annealed(roster, t_eff);
    }
    TimeNs predict_current(const WeightConfig& cfg, ReplicaId leader, Pattern pattern) override {
      return predict_latency_ns({&sim_->replica_matrix_, &cfg, leader, pattern});
    }
    std::uint64_t run_seed() const override { return sim_->sc_.seed; }

   private:
    Impl* sim_;
    ProcessId pid_;
    std::int8_t world_;
  };

  struct Slot {
    std::unique_ptr<Process> main;     // replica or client (world A for equivocators)
    std::unique_ptr<Replica> shadow;   // world B twin, only in equivocation scenarios
    std::unique_ptr<ProcCtx> ctx_main;
    std::unique_ptr<ProcCtx> ctx_shadow;
    Replica* as_replica = nullptr;
    ClientShim* as_client = nullptr;
    bool crashed = false;
    bool silent = false;
    bool equiv_active = false;
  };

  explicit Impl(const Scenario& sc) : sc_(sc), keys_(mix_seed(sc.seed, 0x6b6579ULL)) {
    base_matrix_ = DelayMatrixNs::from(sc.matrix);
    rebuild_replica_matrix();

    bool wants_shadows = std::any_of(sc.faults.begin(), sc.faults.end(), [](const auto& f) {
      return f.kind == FaultDirective::Kind::equivocate;
    });

    ReplicaParams rp;
    rp.n = sc.n;
    rp.t = sc.t;
    rp.checkpoint_k = sc.checkpoint_k;
    rp.theta = sc.theta;
    rp.reopt_interval = sc.reopt_interval;
    rp.batch_max = sc.batch_max;
    rp.pattern = sc.pattern;
    rp.scheme = sc.weights;
    rp.allow_fast = sc.variant == Variant::flash;
    rp.request_timer_floor = sc.request_timer_floor;

    slots_.resize(sc.n + sc.client_regions.size());
    for (ProcessId r = 0; r < sc.n; ++r) {
      auto& slot = slots_[r];
      auto rep = std::make_unique<Replica>(r, &keys_, rp);
      slot.as_replica = rep.get();
      slot.main = std::move(rep);
      slot.ctx_main = std::make_unique<ProcCtx>(this, r, 0);
      if (wants_shadows) {
        slot.shadow = std::make_unique<Replica>(r, &keys_, rp);
        slot.ctx_shadow = std::make_unique<ProcCtx>(this, r, 1);
      }
    }
    for (std::size_t c = 0; c < sc.client_regions.size(); ++c) {
      ProcessId pid = sc.n + static_cast<ProcessId>(c);
      ClientParams cp;
      cp.requests = sc.requests_per_client;
      cp.payload_bytes = sc.payload_bytes;
      cp.think_max = sc.think_max;
      cp.log_check_delay = sc.client_log_check;
      cp.region = sc.client_regions[c];
      cp.n = sc.n;
      auto& slot = slots_[pid];
      auto cli = std::make_unique<ClientShim>(pid, &keys_, cp);
      slot.as_client = cli.get();
      slot.main = std::move(cli);
      slot.ctx_main = std::make_unique<ProcCtx>(this, pid, 0);
    }
  }

  // -------------------------------------------------------------- topology
  std::uint32_t region_of(ProcessId pid) const {
    return pid < sc_.n ? pid : sc_.client_regions[pid - sc_.n];
  }

  void rebuild_replica_matrix() {
    replica_matrix_.d.assign(sc_.n, std::vector<TimeNs>(sc_.n, 0));
    for (std::uint32_t i = 0; i < sc_.n; ++i)
      for (std::uint32_t j = 0; j < sc_.n; ++j)
        replica_matrix_.d[i][j] = scaled_delay(i, j, base_matrix_.at(i, j));
  }

  TimeNs scaled_delay(ProcessId from, ProcessId to, TimeNs base) const {
    double factor = 1.0;
    for (const auto& s : active_slow_) {
      if ((s.from < 0 || s.from == static_cast<std::int64_t>(from)) &&
          (s.to < 0 || s.to == static_cast<std::int64_t>(to)))
        factor *= s.factor;
    }
    if (factor == 1.0) return base;
    return static_cast<TimeNs>(std::llround(static_cast<double>(base) * factor));
  }

  bool link_dropped(ProcessId from, ProcessId to) const {
    for (const auto& d : active_drop_) {
      if ((d.from < 0 || d.from == static_cast<std::int64_t>(from)) &&
          (d.to < 0 || d.to == static_cast<std::int64_t>(to)))
        return true;
    }
    return false;
  }

  TimeNs link_delay(ProcessId from, ProcessId to) {
    if (from == to) return 0;
    TimeNs base = base_matrix_.at(region_of(from), region_of(to));
    TimeNs d = scaled_delay(from, to, base);
    if (sc_.jitter && d > 0) {
      auto key = (static_cast<std::uint64_t>(from) << 32) | to;
      auto it = jitter_rng_.find(key);
      if (it == jitter_rng_.end())
        it = jitter_rng_.emplace(key, Rng(mix_seed(sc_.seed, 0x6a69ULL + key))).first;
      double mult = 1.0 + sc_.jitter_sigma * it->second.normal();
      mult = std::clamp(mult, 0.5, 2.0);
      d = static_cast<TimeNs>(std::llround(static_cast<double>(d) * mult));
    }
    return d;
  }

  // ---------------------------------------------------------------- sending
  void proc_send(ProcessId from, std::int8_t world, ProcessId to, const AnyMsg& msg) {
    proc_send_shared(from, world, to, std::make_shared<AnyMsg>(msg));
    if (to == from) return;
  }

  void proc_send_shared(ProcessId from, std::int8_t world, ProcessId to,
                        const std::shared_ptr<AnyMsg>& msg) {
    auto& slot = slots_[from];
    if (slot.crashed || slot.silent) return;

    std::int8_t tagged = -1;
    if (slot.equiv_active) {
      tagged = world;  // split worlds
    } else if (world == 1) {
      return;  // dormant shadow: outputs swallowed, state kept in lockstep
    }

    if (link_dropped(from, to)) return;

    Event e;
    e.kind = Event::Kind::deliver;
    e.from = from;
    e.to = to;
    e.world = tagged;
    e.msg = msg;
    TimeNs arrival = now_ + link_delay(from, to);
    auto fifo_key = (static_cast<std::uint64_t>(from) << 32) | to;
    auto& last = last_arrival_[fifo_key];
    if (arrival < last) arrival = last;  // per-pair FIFO under jitter
    last = arrival;
    push_event(arrival, from, std::move(e));
  }

  void sniff(ProcessId from, std::int8_t world, const AnyMsg& msg) {
    if (slots_[from].crashed || slots_[from].silent) return;
    if (world == 1 && !slots_[from].equiv_active) return;
    if (const auto* poc = std::get_if<PocMsg>(&msg)) trace_.pocs.push_back(poc->poc);
  }

  std::uint64_t arm_timer(ProcessId pid, std::int8_t world, TimeNs delay, std::uint64_t tag) {
    Event e;
    e.kind = Event::Kind::timer;
    e.tag = tag;
    e.timer_id = ++timer_counter_;
    e.timer_world = world;
    e.to = pid;
    push_event(now_ + std::max<TimeNs>(delay, 0), pid, std::move(e));
    return timer_counter_;
  }

  void push_event(TimeNs at, std::uint32_t sender, Event e) {
    e.at = at;
    e.sender = sender;
    e.seq = ++send_seq_[sender];
    queue_.push(std::move(e));
  }

  bool suppressed(ProcessId pid, std::int8_t world) const {
    if (pid >= slots_.size()) return false;
    const auto& slot = slots_[pid];
    return world == 1 || slot.equiv_active;
  }

  // ------------------------------------------------------------- annealing
  AnnealResult annealed(std::span<const ReplicaId> roster, std::uint32_t t_eff) {
    std::uint64_t rh = 0xcbf29ce484222325ULL;
    for (auto id : roster) rh = (rh ^ id) * 0x100000001b3ULL;
    auto key = std::make_tuple(matrix_version_, rh, t_eff);
    auto it = anneal_cache_.find(key);
    if (it != anneal_cache_.end()) return it->second;
    AnnealResult res =
        anneal(replica_matrix_, roster, t_eff, sc_.pattern,
               mix_seed(sc_.seed, mix_seed(matrix_version_, rh ^ t_eff)));
    anneal_cache_.emplace(key, res);
    return res;
  }

  // ------------------------------------------------------------------ faults
  void schedule_faults() {
    for (std::size_t i = 0; i < sc_.faults.size(); ++i) {
      const auto& f = sc_.faults[i];
      Event e;
      e.kind = Event::Kind::fault;
      e.fault_index = i;
      push_event(f.at, kSimSender, std::move(e));

      TimeNs heal_at = f.until;
      bool healable = f.kind == FaultDirective::Kind::silent ||
                      f.kind == FaultDirective::Kind::slow_link ||
                      f.kind == FaultDirective::Kind::drop;
      if (healable && heal_at < 0 && sc_.gst >= 0) heal_at = sc_.gst;
      if (healable && heal_at > f.at) {
        Event h;
        h.kind = Event::Kind::fault;
        h.fault_index = i;
        h.heal = true;
        push_event(heal_at, kSimSender, std::move(h));
      }
    }
  }

  void apply_fault(const FaultDirective& f, bool heal) {
    switch (f.kind) {
      case FaultDirective::Kind::crash:
        for (auto id : resolve_targets(f)) {
          slots_[id].crashed = true;
          trace_.timeline.push_back({now_, "fault_crash", "replica " + std::to_string(id)});
          note_benign(id);
        }
        break;
      case FaultDirective::Kind::silent:
        for (auto id : resolve_targets(f)) {
          slots_[id].silent = !heal;
          trace_.timeline.push_back(
              {now_, heal ? "fault_silent_heal" : "fault_silent", "replica " + std::to_string(id)});
          if (!heal) note_benign(id);
        }
        break;
      case FaultDirective::Kind::slow_link: {
        if (heal) {
          active_slow_.erase(
              std::remove_if(active_slow_.begin(), active_slow_.end(),
                             [&](const ActiveLink& a) { return a.directive == &f; }),
              active_slow_.end());
        } else {
          active_slow_.push_back({f.from, f.to, f.factor, &f});
        }
        ++matrix_version_;
        rebuild_replica_matrix();
        trace_.timeline.push_back({now_, heal ? "fault_slow_heal" : "fault_slow_link",
                                   std::to_string(f.from) + "->" + std::to_string(f.to) + " x" +
                                       std::to_string(f.factor)});
        break;
      }
      case FaultDirective::Kind::drop:
        if (heal) {
          active_drop_.erase(
              std::remove_if(active_drop_.begin(), active_drop_.end(),
                             [&](const ActiveLink& a) { return a.directive == &f; }),
              active_drop_.end());
        } else {
          active_drop_.push_back({f.from, f.to, 1.0, &f});
        }
        trace_.timeline.push_back({now_, heal ? "fault_drop_heal" : "fault_drop",
                                   std::to_string(f.from) + "->" + std::to_string(f.to)});
        break;
      case FaultDirective::Kind::equivocate:
        activate_equivocation(f);
        break;
    }
  }

  void note_benign(std::uint32_t id) {
    if (std::find(trace_.crashed_or_silent.begin(), trace_.crashed_or_silent.end(), id) ==
        trace_.crashed_or_silent.end())
      trace_.crashed_or_silent.push_back(id);
  }

  std::vector<std::uint32_t> resolve_targets(const FaultDirective& f) {
    std::vector<std::uint32_t> out;
    for (auto id : f.targets) {
      if (id == kLeaderToken) {
        out.push_back(directory_.latest_view().leader);
      } else {
        out.push_back(id);
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  void activate_equivocation(const FaultDirective& f) {
    auto coalition = resolve_targets(f);
    const ViewInfo& view = directory_.latest_view();
    const WeightConfig& cfg = view.thresholds.config;

    auto inert = [&](const std::string& why) {
      trace_.equivocation_inert = true;
      trace_.timeline.push_back({now_, "inert_directive", "equivocate: " + why});
    };

    if (std::find(coalition.begin(), coalition.end(), view.leader) == coalition.end())
      return inert("current leader not in coalition");

    std::uint64_t coalition_units = 0;
    for (auto id : coalition) coalition_units += cfg.units_of(id);
    if (2 * cfg.quorum_units > cfg.total_units + coalition_units)
      return inert("coalition too light to split quorums");

    // Partition the correct replicas into two camps that can each reach a
    // quorum with the coalition's help: greedily minimize camp A.
    std::vector<ReplicaId> correct;
    for (auto id : cfg.roster) {
      if (std::find(coalition.begin(), coalition.end(), id) != coalition.end()) continue;
      if (slots_[id].crashed || slots_[id].silent) continue;
      correct.push_back(id);
    }
    std::sort(correct.begin(), correct.end(), [&](ReplicaId a, ReplicaId b) {
      auto ua = cfg.units_of(a), ub = cfg.units_of(b);
      return ua != ub ? ua > ub : a < b;
    });

    const std::uint64_t need = cfg.quorum_units - coalition_units;
    auto units_of_set = [&](const std::vector<ReplicaId>& v) {
      std::uint64_t u = 0;
      for (auto id : v) u += cfg.units_of(id);
      return u;
    };

    std::vector<ReplicaId> camp_a, camp_b;
    std::uint64_t a_units = 0;
    for (auto id : correct) {
      if (a_units < need) {
        camp_a.push_back(id);
        a_units += cfg.units_of(id);
      } else {
        camp_b.push_back(id);
      }
    }
    if (units_of_set(camp_b) < need) {
      // Minimal split failed; balance the camps instead.
      camp_a.clear();
      camp_b.clear();
      std::uint64_t ua = 0, ub = 0;
      for (auto id : correct) {
        if (ua <= ub) {
          camp_a.push_back(id);
          ua += cfg.units_of(id);
        } else {
          camp_b.push_back(id);
          ub += cfg.units_of(id);
        }
      }
      if (ua < need || ub < need) return inert("no feasible camp partition");
    }

    for (auto id : camp_a) camp_[id] = 0;
    for (auto id : camp_b) camp_[id] = 1;
    for (auto id : coalition) {
      slots_[id].equiv_active = true;
      if (slots_[id].shadow)
        slots_[id].shadow->set_batch_hook([](Batch& batch) {
          if (batch.size() >= 2) {
            std::rotate(batch.begin(), batch.begin() + 1, batch.end());
          } else if (!batch.empty()) {
            batch.push_back(batch.front());
          }
        });
    }
    trace_.coalition = coalition;
    std::string detail = "coalition=";
    for (auto id : coalition) detail += std::to_string(id) + " ";
    detail += "campA=" + std::to_string(camp_a.size()) + " campB=" + std::to_string(camp_b.size());
    trace_.timeline.push_back({now_, "equivocation_active", detail});
  }

  // --------------------------------------------------------------- delivery
  void deliver(const Event& e) {
    auto& slot = slots_[e.to];
    if (slot.crashed) return;

    if (e.to >= sc_.n) {  // client
      slot.main->on_message(e.from, *e.msg);
      return;
    }

    if (slot.equiv_active && slot.shadow) {
      if (e.world < 0) {
        slot.main->on_message(e.from, *e.msg);
        slot.shadow->on_message(e.from, *e.msg);
      } else if (e.world == 0) {
        slot.main->on_message(e.from, *e.msg);
      } else {
        slot.shadow->on_message(e.from, *e.msg);
      }
      return;
    }

    // Correct replica: world-tagged traffic only reaches its own camp.
    if (e.world >= 0) {
      auto it = camp_.find(e.to);
      if (it != camp_.end() && it->second != e.world) return;
    }
    slot.main->on_message(e.from, *e.msg);
    if (slot.shadow && !slot.equiv_active) slot.shadow->on_message(e.from, *e.msg);
  }

  void fire_timer(const Event& e) {
    if (cancelled_.count(e.timer_id)) return;
    auto& slot = slots_[e.to];
    if (slot.crashed) return;
    if (e.timer_world == 1) {
      if (slot.shadow) slot.shadow->on_timer(e.tag);
      return;
    }
    slot.main->on_timer(e.tag);
  }

  // ------------------------------------------------------------------- run
  Trace run() {
    for (ProcessId r = 0; r < sc_.n; ++r) {
      slots_[r].main->start(*slots_[r].ctx_main);
      if (slots_[r].shadow) slots_[r].shadow->start(*slots_[r].ctx_shadow);
    }
    for (std::size_t c = sc_.n; c < slots_.size(); ++c)
      slots_[c].main->start(*slots_[c].ctx_main);
    schedule_faults();

    while (!queue_.empty()) {
      Event e = queue_.top();
      queue_.pop();
      if (e.at > sc_.duration) break;
      now_ = e.at;
      switch (e.kind) {
        case Event::Kind::deliver:
          deliver(e);
          break;
        case Event::Kind::timer:
          fire_timer(e);
          break;
        case Event::Kind::fault:
          apply_fault(sc_.faults[e.fault_index], e.heal);
          break;
      }
      if (clients_done()) {
        trace_.all_clients_done = true;
        break;
      }
    }

    trace_.end_time = now_;
    for (const auto& [r, v] : directory_.views()) trace_.views.push_back(v);
    trace_.final_epoch = directory_.latest_epoch();
    if (const auto* mem = directory_.epoch(trace_.final_epoch))
      trace_.final_roster = mem->roster;
    for (ProcessId r = 0; r < sc_.n; ++r) {
      if (slots_[r].equiv_active) continue;
      trace_.final_logs.emplace_back(r, slots_[r].as_replica->log());
    }
    for (std::size_t c = sc_.n; c < slots_.size(); ++c) {
      const auto* cli = slots_[c].as_client;
      for (const auto& op : cli->ops())
        trace_.ops.push_back({cli->id(), cli->region(), op});
    }
    return std::move(trace_);
  }

  bool clients_done() const {
    for (std::size_t c = sc_.n; c < slots_.size(); ++c)
      if (!slots_[c].as_client->done()) return false;
    return true;
  }

  // ------------------------------------------------------------------ state
  struct ActiveLink {
    std::int64_t from;
    std::int64_t to;
    double factor;
    const FaultDirective* directive;
  };

  Scenario sc_;
  KeyStore keys_;
  DelayMatrixNs base_matrix_;
  DelayMatrixNs replica_matrix_;  // replica-to-replica with active slowdowns
  std::uint64_t matrix_version_ = 0;

  std::vector<Slot> slots_;
  std::map<ProcessId, std::int8_t> camp_;
  SystemDirectory directory_;

  std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
  std::map<std::uint32_t, std::uint64_t> send_seq_;
  std::map<std::uint64_t, TimeNs> last_arrival_;
  std::map<std::uint64_t, Rng> jitter_rng_;
  std::set<std::uint64_t> cancelled_;
  std::uint64_t timer_counter_ = 0;
  TimeNs now_ = 0;

  std::vector<ActiveLink> active_slow_;
  std::vector<ActiveLink> active_drop_;

  std::map<std::tuple<std::uint64_t, std::uint64_t, std::uint32_t>, AnnealResult> anneal_cache_;

  Trace trace_;
};

Simulation::Simulation(const Scenario& sc) : impl_(std::make_unique<Impl>(sc)) {}
Simulation::~Simulation() = default;
Trace Simulation::run() { return impl_->run(); }

Trace run_scenario(const Scenario& sc) {
  auto problems = sc.validate();
  if (!problems.empty()) throw std::invalid_argument("invalid scenario: " + problems.front());
  Simulation sim(sc);
  return sim.run();
}

}  // namespace wbft
