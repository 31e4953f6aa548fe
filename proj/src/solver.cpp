#include "droneq/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <sstream>

#include "droneq/conic.hpp"
#include "droneq/rng.hpp"

namespace droneq {

int min_stable_k(double load) {
    int k = static_cast<int>(std::floor(load)) + 1;
    if (k - load < kStabilityMargin) ++k;
    return k;
}

int budget(int k_star, double alpha, std::optional<int> k_hard_cap) {
    int K = static_cast<int>(std::floor((1.0 + alpha) * k_star + 1e-9));
    if (k_hard_cap) K = std::min(K, *k_hard_cap);
    if (K < k_star)
        throw InfeasibleInstance("drone cap " + std::to_string(K) + " below minimum fleet " +
                                 std::to_string(k_star));
    return K;
}

FeasibilityCheck feasible(const Instance& inst, const Assignment& asg, std::optional<int> K) {
    const auto units = demand_units(inst, asg.model);
    const int J = inst.num_facilities();
    if (static_cast<int>(asg.open.size()) != J || static_cast<int>(asg.drones.size()) != J ||
        asg.unit_facility.size() != units.size())
        return {false, "assignment shape mismatch"};
    for (int j = 0; j < J; ++j) {
        if (asg.drones[j] < 0) return {false, "negative drone count"};
        if (!asg.open[j] && asg.drones[j] > 0) return {false, "closed facility holds drones"};
    }
    std::vector<double> load(J, 0.0);
    for (std::size_t u = 0; u < units.size(); ++u) {
        const int j = asg.unit_facility[u];
        if (j < 0 || j >= J) return {false, "unit not assigned to a facility"};
        if (!asg.open[j]) return {false, "unit assigned to a closed facility"};
        if (inst.travel(units[u].node, j) > inst.fleet.endurance_min)
            return {false, "assignment exceeds endurance"};
        load[j] += units[u].rate * inst.service_time(units[u].node, j);
    }
    for (int j = 0; j < J; ++j)
        if (asg.open[j] && asg.drones[j] - load[j] < kStabilityMargin)
            return {false, "stability margin violated at facility " + std::to_string(j)};
    if (K && asg.total_drones() > *K) return {false, "drone budget exceeded"};
    return {true, ""};
}

namespace {

constexpr double kInfVal = std::numeric_limits<double>::infinity();

struct Agg {
    double N = 0, load = 0, gamma = 0;
    std::vector<double> load_r, gamma_r, maxt_r;
};

// Score of one candidate: lexicographic (Z, sumW) with validity first.
struct Score {
    bool valid = false;
    double Z = kInfVal;
    double sumW = kInfVal;
    std::vector<double> Z_r;

    bool better_than(const Score& o) const {
        if (valid != o.valid) return valid;
        if (Z != o.Z) return Z < o.Z;
        return sumW < o.sumW;
    }
};

// Fast evaluation core shared by the exact and heuristic solvers. Mirrors
// module queueing's arithmetic so scores agree with the canonical
// re-evaluation of the final solution.
struct Evaluator {
    const Instance& inst;
    const Model model;
    const std::vector<DemandUnit> units;
    int J, R;
    long evals = 0;
    std::vector<std::vector<double>> svc, trv;  // [unit][facility]
    std::vector<std::vector<char>> reach;

    Evaluator(const Instance& inst_, Model model_)
        : inst(inst_), model(model_), units(demand_units(inst_, model_)) {
        J = inst.num_facilities();
        R = model == Model::NP ? 1 : inst.num_classes();
        const int U = static_cast<int>(units.size());
        svc.assign(U, std::vector<double>(J));
        trv.assign(U, std::vector<double>(J));
        reach.assign(U, std::vector<char>(J));
        for (int u = 0; u < U; ++u)
            for (int j = 0; j < J; ++j) {
                svc[u][j] = inst.service_time(units[u].node, j);
                trv[u][j] = inst.travel(units[u].node, j);
                reach[u][j] = trv[u][j] <= inst.fleet.endurance_min ? 1 : 0;
            }
    }

    int num_units() const { return static_cast<int>(units.size()); }
    int ucls(int u) const { return model == Model::NP ? 1 : units[u].cls; }

    void build_aggs(const std::vector<int>& uf, std::vector<Agg>& aggs) const {
        aggs.assign(J, Agg{});
        for (Agg& a : aggs) {
            a.load_r.assign(R, 0.0);
            a.gamma_r.assign(R, 0.0);
            a.maxt_r.assign(R, -1.0);
        }
        for (int u = 0; u < num_units(); ++u) {
            const int j = uf[u];
            if (j < 0) continue;
            Agg& a = aggs[j];
            const double rate = units[u].rate, s = svc[u][j];
            a.N += rate * s * s;
            a.load += rate * s;
            a.gamma += rate;
            const int r = ucls(u) - 1;
            a.load_r[r] += rate * s;
            a.gamma_r[r] += rate;
            a.maxt_r[r] = std::max(a.maxt_r[r], trv[u][j]);
        }
    }

    // One facility's per-class waits; false when unstable.
    bool waits(const Agg& a, double k, std::vector<double>& w) const {
        std::fill(w.begin(), w.end(), 0.0);
        if (a.gamma == 0) return true;
        if (k - a.load < kStabilityMargin) return false;
        if (model == Model::SP) {
            double cum_prev = 0.0;
            for (int r = 1; r <= R; ++r) {
                const double cum = cum_prev + a.load_r[r - 1];
                w[r - 1] = a.N / ((2.0 * (k - cum)) * (k - cum_prev));
                cum_prev = cum;
            }
        } else {
            const double fcfs = a.N / ((2.0 * (k - a.load)) * k);
            for (int r = 1; r <= R; ++r) {
                double v = fcfs;
                if (model == Model::DP)
                    for (int l = 1; l < r; ++l)
                        v += inst.priority.delta_a(l - 1, r - 1) *
                             ((a.load * a.load_r[l - 1]) / (k * k));
                w[r - 1] = v;
            }
        }
        return true;
    }

    Score score(const std::vector<int>& uf, const std::vector<int>& k) {
        ++evals;
        static thread_local std::vector<Agg> aggs;
        static thread_local std::vector<double> w;
        build_aggs(uf, aggs);
        w.assign(R, 0.0);
        Score s;
        s.Z_r.assign(R, 0.0);
        s.sumW = 0;
        for (int j = 0; j < J; ++j) {
            const Agg& a = aggs[j];
            if (a.gamma == 0) continue;
            if (!waits(a, k[j], w)) return Score{};
            for (int r = 0; r < R; ++r) {
                if (a.maxt_r[r] >= 0) s.Z_r[r] = std::max(s.Z_r[r], a.maxt_r[r] + w[r]);
                s.sumW += a.gamma_r[r] * w[r];
            }
        }
        s.Z = 0;
        if (model == Model::NP) {
            s.Z = s.Z_r[0];
        } else {
            for (int r = 0; r < R; ++r) s.Z += inst.priority.weights[r] * s.Z_r[r];
        }
        s.valid = true;
        return s;
    }
};

// Full deterministic candidate ordering used to merge equal-score states.
struct Candidate {
    Score score;
    std::vector<int> uf, k;
    int open_count = 0;

    bool better_than(const Candidate& o) const {
        if (score.valid != o.score.valid) return score.valid;
        if (score.Z != o.score.Z) return score.Z < o.score.Z;
        if (score.sumW != o.score.sumW) return score.sumW < o.score.sumW;
        if (open_count != o.open_count) return open_count < o.open_count;
        if (uf != o.uf) return uf < o.uf;
        return k < o.k;
    }
};

int count_open(const std::vector<int>& k) {
    int n = 0;
    for (int v : k) n += v > 0;
    return n;
}

std::vector<double> facility_loads(const Evaluator& ev, const std::vector<int>& uf) {
    std::vector<double> load(ev.J, 0.0);
    for (int u = 0; u < ev.num_units(); ++u)
        if (uf[u] >= 0) load[uf[u]] += ev.units[u].rate * ev.svc[u][uf[u]];
    return load;
}

// Number of ways to split extra drones over used facilities, saturating.
long composition_count(int extra, int used) {
    long count = 1;
    for (int i = 1; i < used; ++i) {
        count = count * (extra + i) / i;
        if (count > 1000000) return 1000000;
    }
    return count;
}

constexpr long kExactAllocLimit = 2000;

// Optimal (or greedy, beyond the enumeration limit) drone split for a fixed
// routing: every used facility gets its minimal stable count, then the
// remaining budget is spent in full since waits only shrink with drones.
std::optional<std::vector<int>> alloc_k(Evaluator& ev, const std::vector<int>& uf, int K) {
    const std::vector<double> load = facility_loads(ev, uf);
    std::vector<int> k(ev.J, 0), used;
    int base = 0;
    for (int j = 0; j < ev.J; ++j)
        if (load[j] > 0) {
            k[j] = min_stable_k(load[j]);
            base += k[j];
            used.push_back(j);
        }
    if (used.empty() || base > K) return std::nullopt;
    const int extra = K - base;
    if (extra == 0) return k;

    if (composition_count(extra, static_cast<int>(used.size())) <= kExactAllocLimit) {
        std::vector<int> best_k, cur = k;
        Score best_s;
        // Recursive spend-all enumeration over used facilities.
        std::function<void(std::size_t, int)> rec = [&](std::size_t idx, int left) {
            if (idx + 1 == used.size()) {
                cur[used[idx]] = k[used[idx]] + left;
                const Score s = ev.score(uf, cur);
                if (best_k.empty() || s.better_than(best_s) ||
                    (!best_s.better_than(s) && cur < best_k)) {
                    best_s = s;
                    best_k = cur;
                }
                cur[used[idx]] = k[used[idx]];
                return;
            }
            for (int give = 0; give <= left; ++give) {
                cur[used[idx]] = k[used[idx]] + give;
                rec(idx + 1, left - give);
            }
            cur[used[idx]] = k[used[idx]];
        };
        rec(0, extra);
        return best_k;
    }

    // Greedy marginal placement; each step strictly reduces some wait.
    for (int step = 0; step < extra; ++step) {
        int best_j = used[0];
        Score best_s;
        bool first = true;
        for (int j : used) {
            ++k[j];
            const Score s = ev.score(uf, k);
            --k[j];
            if (first || s.better_than(best_s)) {
                best_s = s;
                best_j = j;
                first = false;
            }
        }
        ++k[best_j];
    }
    return k;
}

}  // namespace

MinFleetResult min_fleet(const Instance& inst) {
    Evaluator ev(inst, Model::NP);
    const int U = ev.num_units();
    for (int u = 0; u < U; ++u) {
        bool any = false;
        for (int j = 0; j < ev.J; ++j) any = any || ev.reach[u][j];
        if (!any)
            throw InfeasibleInstance("node " + std::to_string(ev.units[u].node) +
                                     " has no facility within endurance");
    }

    // Candidate ordering: fewest drones, then the response-time score.
    auto k_total = [&](const std::vector<int>& uf) {
        const auto load = facility_loads(ev, uf);
        int total = 0;
        for (int j = 0; j < ev.J; ++j)
            if (load[j] > 0) total += min_stable_k(load[j]);
        return total;
    };
    auto min_k_vec = [&](const std::vector<int>& uf) {
        const auto load = facility_loads(ev, uf);
        std::vector<int> k(ev.J, 0);
        for (int j = 0; j < ev.J; ++j)
            if (load[j] > 0) k[j] = min_stable_k(load[j]);
        return k;
    };

    std::vector<int> best_uf;
    int best_total = std::numeric_limits<int>::max();
    Score best_score;
    auto consider = [&](const std::vector<int>& uf) {
        const int total = k_total(uf);
        if (total > best_total) return;
        const Score s = ev.score(uf, min_k_vec(uf));
        if (total < best_total || s.better_than(best_score) ||
            (!best_score.better_than(s) && uf < best_uf)) {
            best_total = total;
            best_score = s;
            best_uf = uf;
        }
    };

    const bool exact = ev.J <= kBruteMaxFacilities && U <= kBruteMaxUnits;
    if (exact) {
        std::vector<int> uf(U, -1);
        std::function<void(int)> rec = [&](int u) {
            if (u == U) {
                consider(uf);
                return;
            }
            for (int j = 0; j < ev.J; ++j) {
                if (!ev.reach[u][j]) continue;
                uf[u] = j;
                rec(u + 1);
            }
            uf[u] = -1;
        };
        rec(0);
    } else {
        // Hill-climb from several deterministic constructions.
        for (int restart = 0; restart < 8; ++restart) {
            Rng rng = Rng::substream(0x6d696e666c656574ULL, restart);
            std::vector<int> uf(U);
            if (restart == 0) {
                for (int u = 0; u < U; ++u) {
                    int bj = -1;
                    for (int j = 0; j < ev.J; ++j)
                        if (ev.reach[u][j] && (bj < 0 || ev.trv[u][j] < ev.trv[u][bj])) bj = j;
                    uf[u] = bj;
                }
            } else {
                // Random open subset, nearest reachable member.
                const int m = 1 + static_cast<int>(rng.uniform_int(ev.J));
                std::vector<int> open;
                std::vector<int> order(ev.J);
                std::iota(order.begin(), order.end(), 0);
                for (int i = 0; i < m; ++i)
                    std::swap(order[i], order[i + rng.uniform_int(ev.J - i)]);
                open.assign(order.begin(), order.begin() + m);
                for (int u = 0; u < U; ++u) {
                    int bj = -1;
                    for (int j : open)
                        if (ev.reach[u][j] && (bj < 0 || ev.trv[u][j] < ev.trv[u][bj])) bj = j;
                    if (bj < 0)
                        for (int j = 0; j < ev.J; ++j)
                            if (ev.reach[u][j] && (bj < 0 || ev.trv[u][j] < ev.trv[u][bj])) bj = j;
                    uf[u] = bj;
                }
            }
            bool improved = true;
            auto total_of = [&](const std::vector<int>& c) { return k_total(c); };
            int cur_total = total_of(uf);
            while (improved) {
                improved = false;
                for (int u = 0; u < U && !improved; ++u)
                    for (int j = 0; j < ev.J && !improved; ++j) {
                        if (j == uf[u] || !ev.reach[u][j]) continue;
                        const int old = uf[u];
                        uf[u] = j;
                        const int t = total_of(uf);
                        if (t < cur_total) {
                            cur_total = t;
                            improved = true;
                        } else {
                            uf[u] = old;
                        }
                    }
            }
            consider(uf);
        }
    }

    MinFleetResult res;
    res.k_star = best_total;
    res.exact = exact;
    res.assignment.model = Model::NP;
    res.assignment.unit_facility = best_uf;
    res.assignment.drones = min_k_vec(best_uf);
    res.assignment.open.assign(ev.J, 0);
    for (int j = 0; j < ev.J; ++j) res.assignment.open[j] = res.assignment.drones[j] > 0;
    return res;
}

Assignment convert_assignment(const Instance& inst, const Assignment& node_level, Model model) {
    Assignment out;
    out.model = model;
    out.open = node_level.open;
    out.drones = node_level.drones;
    const auto units = demand_units(inst, model);
    out.unit_facility.resize(units.size());
    for (std::size_t u = 0; u < units.size(); ++u)
        out.unit_facility[u] = node_level.unit_facility[units[u].node];
    return out;
}

namespace {

Assignment to_assignment(const Evaluator& ev, const std::vector<int>& uf,
                         const std::vector<int>& k) {
    Assignment a;
    a.model = ev.model;
    a.unit_facility = uf;
    a.drones = k;
    a.open.assign(ev.J, 0);
    for (int j = 0; j < ev.J; ++j) a.open[j] = k[j] > 0;
    return a;
}

SolveResult finalize(const Instance& inst, Evaluator& ev, const Candidate& best,
                     const char* method, double wall_ms,
                     std::vector<std::pair<long, double>> trace) {
    if (!best.score.valid) throw InfeasibleInstance("no stable assignment within the drone budget");
    SolveResult res;
    res.best = to_assignment(ev, best.uf, best.k);
    res.objective = objective(inst, res.best);
    const auto metrics = report_metrics(inst, res.best);
    for (const ClassMetrics& m : metrics) res.sum_wait += m.sumW;
    res.method = method;
    res.iterations = ev.evals;
    res.wall_ms = wall_ms;
    res.trace = std::move(trace);
    return res;
}

}  // namespace

namespace {

void require_model_fits(const Instance& inst, Model model) {
    if (model == Model::DP && inst.mode != Mode::DP)
        throw ValidationError("dynamic-priority model needs a dp instance");
}

}  // namespace

SolveResult brute_force(const Instance& inst, Model model, int K) {
    const auto t0 = std::chrono::steady_clock::now();
    require_model_fits(inst, model);
    Evaluator ev(inst, model);
    const int U = ev.num_units();
    const int scale = model == Model::DP ? inst.num_classes() : 1;
    if (ev.J > kBruteMaxFacilities || U * scale > kBruteMaxUnits || K > kBruteMaxDrones)
        throw SizeExceeded("instance beyond brute-force bounds");

    Candidate best;
    std::vector<int> uf(U, -1);
    for (int mask = 1; mask < (1 << ev.J); ++mask) {
        std::vector<int> open;
        for (int j = 0; j < ev.J; ++j)
            if (mask & (1 << j)) open.push_back(j);

        std::function<void(int)> assign_rec = [&](int u) {
            if (u == U) {
                std::vector<int> k(ev.J, 0);
                int base = 0;
                bool used_all = true;
                for (int j : open) {
                    double load = 0;
                    bool any = false;
                    for (int v = 0; v < U; ++v)
                        if (uf[v] == j) {
                            load += ev.units[v].rate * ev.svc[v][j];
                            any = true;
                        }
                    if (!any) {
                        used_all = false;
                        break;
                    }
                    k[j] = min_stable_k(load);
                    base += k[j];
                }
                // Unused open facilities only duplicate a smaller mask.
                if (!used_all || base > K) return;
                const int extra = K - base;
                std::function<void(std::size_t, int)> kc = [&](std::size_t idx, int left) {
                    if (idx + 1 == open.size()) {
                        k[open[idx]] += left;
                        Candidate cand{ev.score(uf, k), uf, k, count_open(k)};
                        if (cand.better_than(best)) best = std::move(cand);
                        k[open[idx]] -= left;
                        return;
                    }
                    for (int give = 0; give <= left; ++give) {
                        k[open[idx]] += give;
                        kc(idx + 1, left - give);
                        k[open[idx]] -= give;
                    }
                };
                kc(0, extra);
                return;
            }
            for (int j : open) {
                if (!ev.reach[u][j]) continue;
                uf[u] = j;
                assign_rec(u + 1);
            }
            uf[u] = -1;
        };
        assign_rec(0);
    }
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return finalize(inst, ev, best, "brute_force", ms, {});
}

SolveResult local_search(const Instance& inst, Model model, int K, std::uint64_t seed,
                         const SearchParams& params) {
    const auto t0 = std::chrono::steady_clock::now();
    require_model_fits(inst, model);
    Evaluator ev(inst, model);
    const int U = ev.num_units();
    for (int u = 0; u < U; ++u) {
        bool any = false;
        for (int j = 0; j < ev.J; ++j) any = any || ev.reach[u][j];
        if (!any)
            throw InfeasibleInstance("node " + std::to_string(ev.units[u].node) +
                                     " has no facility within endurance");
    }

    Candidate best;
    std::vector<std::pair<long, double>> trace;

    auto make_candidate = [&](const std::vector<int>& uf) -> std::optional<Candidate> {
        auto k = alloc_k(ev, uf, K);
        if (!k || k->empty()) return std::nullopt;
        Candidate c{ev.score(uf, *k), uf, *k, count_open(*k)};
        if (!c.score.valid) return std::nullopt;
        return c;
    };

    auto nearest_within = [&](int u, const std::vector<int>& open) {
        int bj = -1;
        for (int j : open)
            if (ev.reach[u][j] && (bj < 0 || ev.trv[u][j] < ev.trv[u][bj])) bj = j;
        return bj;
    };

    // A warm start's own drone split topped up to spend the full budget.
    // Extra drones only ever shrink waits, so keeping this candidate means a
    // larger budget can never end worse than the solution it started from.
    auto extend_drones = [&](const std::vector<int>& uf,
                             const std::vector<int>& warm_k) -> std::optional<Candidate> {
        if (static_cast<int>(warm_k.size()) != ev.J) return std::nullopt;
        const auto load = facility_loads(ev, uf);
        std::vector<int> k(ev.J, 0), used;
        int total = 0;
        for (int j = 0; j < ev.J; ++j)
            if (load[j] > 0) {
                if (warm_k[j] == 0) return std::nullopt;
                k[j] = warm_k[j];
                total += k[j];
                used.push_back(j);
            }
        if (used.empty() || total > K) return std::nullopt;
        for (int step = total; step < K; ++step) {
            int best_j = used[0];
            Score best_s;
            bool first = true;
            for (int j : used) {
                ++k[j];
                const Score s = ev.score(uf, k);
                --k[j];
                if (first || s.better_than(best_s)) {
                    best_s = s;
                    best_j = j;
                    first = false;
                }
            }
            ++k[best_j];
        }
        Candidate c{ev.score(uf, k), uf, k, count_open(k)};
        if (!c.score.valid) return std::nullopt;
        return c;
    };

    // Deterministic construction for one restart index.
    auto construct = [&](int restart) -> std::optional<Candidate> {
        if (restart == 0) {
            std::vector<int> uf(U);
            for (int u = 0; u < U; ++u) {
                int bj = -1;
                for (int j = 0; j < ev.J; ++j)
                    if (ev.reach[u][j] && (bj < 0 || ev.trv[u][j] < ev.trv[u][bj])) bj = j;
                uf[u] = bj;
            }
            return make_candidate(uf);
        }
        Rng rng = Rng::substream(seed, restart);
        for (int m = 1 + restart % ev.J; m >= 1; --m) {
            // Distance-spread seeding of m facilities.
            std::vector<int> open;
            open.push_back(static_cast<int>(rng.uniform_int(ev.J)));
            while (static_cast<int>(open.size()) < m) {
                int far_j = -1;
                double far_d = -1;
                for (int j = 0; j < ev.J; ++j) {
                    if (std::find(open.begin(), open.end(), j) != open.end()) continue;
                    double dmin = kInfVal;
                    for (int o : open) {
                        const double dx = inst.facilities[j].x - inst.facilities[o].x;
                        const double dy = inst.facilities[j].y - inst.facilities[o].y;
                        dmin = std::min(dmin, dx * dx + dy * dy);
                    }
                    if (dmin > far_d) {
                        far_d = dmin;
                        far_j = j;
                    }
                }
                open.push_back(far_j);
            }
            std::vector<int> uf(U);
            bool ok = true;
            for (int u = 0; u < U && ok; ++u) {
                int bj = nearest_within(u, open);
                if (bj < 0) {
                    for (int j = 0; j < ev.J; ++j)
                        if (ev.reach[u][j] && (bj < 0 || ev.trv[u][j] < ev.trv[u][bj])) bj = j;
                }
                ok = bj >= 0;
                uf[u] = bj;
            }
            if (!ok) continue;
            if (auto c = make_candidate(uf)) return c;
        }
        return std::nullopt;
    };

    auto hill_climb = [&](Candidate cur) {
        bool improved = true;
        while (improved && ev.evals < params.max_evals) {
            improved = false;
            // Move one unit to another facility.
            for (int u = 0; u < U && !improved; ++u)
                for (int j = 0; j < ev.J && !improved; ++j) {
                    if (j == cur.uf[u] || !ev.reach[u][j]) continue;
                    std::vector<int> uf = cur.uf;
                    uf[u] = j;
                    if (auto c = make_candidate(uf))
                        if (c->score.better_than(cur.score)) {
                            cur = std::move(*c);
                            improved = true;
                        }
                }
            // Close one used facility, spilling to nearest remaining.
            if (!improved) {
                std::vector<int> open;
                for (int j = 0; j < ev.J; ++j)
                    if (cur.k[j] > 0) open.push_back(j);
                for (std::size_t oi = 0; oi < open.size() && !improved && open.size() > 1; ++oi) {
                    std::vector<int> rest;
                    for (int j : open)
                        if (j != open[oi]) rest.push_back(j);
                    std::vector<int> uf = cur.uf;
                    bool ok = true;
                    for (int u = 0; u < U && ok; ++u)
                        if (uf[u] == open[oi]) {
                            const int bj = nearest_within(u, rest);
                            ok = bj >= 0;
                            uf[u] = bj;
                        }
                    if (!ok) continue;
                    if (auto c = make_candidate(uf))
                        if (c->score.better_than(cur.score)) {
                            cur = std::move(*c);
                            improved = true;
                        }
                }
            }
            // Open an unused facility, attracting closer units.
            if (!improved)
                for (int j = 0; j < ev.J && !improved; ++j) {
                    if (cur.k[j] > 0) continue;
                    std::vector<int> uf = cur.uf;
                    bool moved = false;
                    for (int u = 0; u < U; ++u)
                        if (ev.reach[u][j] && ev.trv[u][j] < ev.trv[u][uf[u]]) {
                            uf[u] = j;
                            moved = true;
                        }
                    if (!moved) continue;
                    if (auto c = make_candidate(uf))
                        if (c->score.better_than(cur.score)) {
                            cur = std::move(*c);
                            improved = true;
                        }
                }
            // Shift one drone between used facilities.
            if (!improved) {
                const auto load = facility_loads(ev, cur.uf);
                for (int j1 = 0; j1 < ev.J && !improved; ++j1) {
                    if (cur.k[j1] == 0 || cur.k[j1] - 1 < min_stable_k(load[j1])) continue;
                    for (int j2 = 0; j2 < ev.J && !improved; ++j2) {
                        if (j2 == j1 || cur.k[j2] == 0) continue;
                        std::vector<int> k = cur.k;
                        --k[j1];
                        ++k[j2];
                        const Score s = ev.score(cur.uf, k);
                        if (s.better_than(cur.score)) {
                            cur = Candidate{s, cur.uf, k, count_open(k)};
                            improved = true;
                        }
                    }
                }
            }
            if (improved && params.trace) trace.push_back({ev.evals, cur.score.Z});
        }
        return cur;
    };

    bool any_start = false;
    for (const Assignment& warm : params.warm_starts) {
        const Assignment shaped =
            warm.model == model ? warm : convert_assignment(inst, warm, model);
        if (shaped.unit_facility.size() != static_cast<std::size_t>(U)) continue;
        std::optional<Candidate> start = make_candidate(shaped.unit_facility);
        if (auto kept = extend_drones(shaped.unit_facility, shaped.drones))
            if (!start || kept->score.better_than(start->score)) start = std::move(kept);
        if (start) {
            any_start = true;
            const Candidate improved = hill_climb(std::move(*start));
            if (improved.better_than(best)) best = improved;
        }
    }
    for (int restart = 0; restart < params.restarts && ev.evals < params.max_evals; ++restart) {
        auto c = construct(restart);
        if (!c) continue;
        any_start = true;
        const Candidate improved = hill_climb(std::move(*c));
        if (improved.better_than(best)) best = improved;
    }
    if (!any_start) throw InfeasibleInstance("no stable assignment within the drone budget");

    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return finalize(inst, ev, best, "local_search", ms, std::move(trace));
}

std::string solution_to_json(const Instance& inst, const SolveResult& res, int k_star, int K) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["model"] = to_string(res.best.model);
    j["instance_hash"] = instance_hash(inst);
    j["k_star"] = k_star;
    j["budget"] = K;
    j["open"] = nlohmann::ordered_json::array();
    for (int f = 0; f < inst.num_facilities(); ++f)
        if (res.best.open[f]) j["open"].push_back(f);
    j["drones"] = res.best.drones;
    j["routing"] = nlohmann::ordered_json::array();
    const auto units = demand_units(inst, res.best.model);
    for (std::size_t u = 0; u < units.size(); ++u)
        j["routing"].push_back({{"node", units[u].node},
                                {"class", units[u].cls},
                                {"facility", res.best.unit_facility[u]}});
    j["objective"] = {{"Z", res.objective.Z}, {"Z_r", res.objective.Z_r}};
    j["metrics"] = nlohmann::ordered_json::array();
    const auto metrics = report_metrics(inst, res.best);
    for (std::size_t r = 0; r < metrics.size(); ++r)
        j["metrics"].push_back({{"class", r + 1},
                                {"Z", metrics[r].Z},
                                {"sumZ", metrics[r].sumZ},
                                {"W", metrics[r].W},
                                {"sumW", metrics[r].sumW}});
    j["method"] = res.method;
    j["iterations"] = res.iterations;
    j["wall_ms"] = res.wall_ms;
    return j.dump(2) + "\n";
}

void write_solution(const Instance& inst, const SolveResult& res, int k_star, int K,
                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write solution file: " + path);
    out << solution_to_json(inst, res, k_star, K);
}

Assignment read_solution(const std::string& path, const Instance& inst) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open solution file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.contains("model")) throw ParseError("missing field 'model' in solution");
    Assignment a;
    a.model = model_from_string(j["model"].get<std::string>());
    if (j.contains("instance_hash") && j["instance_hash"].get<std::string>() != instance_hash(inst))
        throw ValidationError("solution was produced for a different instance");
    const auto units = demand_units(inst, a.model);
    a.open.assign(inst.num_facilities(), 0);
    a.drones = j.at("drones").get<std::vector<int>>();
    if (a.drones.size() != static_cast<std::size_t>(inst.num_facilities()))
        throw ValidationError("drones list length mismatch");
    for (int f : j.at("open").get<std::vector<int>>()) {
        if (f < 0 || f >= inst.num_facilities()) throw ValidationError("open facility out of range");
        a.open[f] = 1;
    }
    a.unit_facility.assign(units.size(), -1);
    for (const auto& row : j.at("routing")) {
        const int node = row.at("node").get<int>();
        const int cls = row.at("class").get<int>();
        const int fac = row.at("facility").get<int>();
        bool matched = false;
        for (std::size_t u = 0; u < units.size(); ++u)
            if (units[u].node == node && units[u].cls == cls) {
                a.unit_facility[u] = fac;
                matched = true;
            }
        if (!matched) throw ValidationError("routing row does not match any demand unit");
    }
    for (int f : a.unit_facility)
        if (f < 0) throw ValidationError("routing incomplete: some demand unit unassigned");
    return a;
}

}  // namespace droneq
