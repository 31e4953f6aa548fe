#include "droneq/conic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace droneq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string idx(int a) { return "[" + std::to_string(a) + "]"; }
std::string idx(int a, int b) { return "[" + std::to_string(a) + "," + std::to_string(b) + "]"; }
std::string idx(int a, int b, int c) {
    return "[" + std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(c) + "]";
}
std::string idx(int a, int b, int c, int d) {
    return "[" + std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(c) + "," +
           std::to_string(d) + "]";
}

// "wo[3,2]" -> {3, 2}
std::vector<int> bracket_indices(const std::string& name) {
    std::vector<int> out;
    auto lb = name.find('[');
    if (lb == std::string::npos) return out;
    int cur = 0;
    for (std::size_t p = lb + 1; p < name.size() && name[p] != ']'; ++p) {
        if (name[p] == ',') {
            out.push_back(cur);
            cur = 0;
        } else {
            cur = cur * 10 + (name[p] - '0');
        }
    }
    out.push_back(cur);
    return out;
}

bool has_prefix(const std::string& name, const char* prefix) {
    const std::size_t n = std::string::traits_type::length(prefix);
    return name.size() > n && name.compare(0, n, prefix) == 0 && name[n] == '[';
}

}  // namespace

double AffExpr::eval(const std::vector<double>& point) const {
    double v = constant;
    for (const LinTerm& t : terms) v += t.coef * point[t.var];
    return v;
}

int ConicProgram::add_var(const std::string& name, VarKind kind, double lb, double ub) {
    vars.push_back({name, kind, lb, ub});
    return static_cast<int>(vars.size()) - 1;
}

int ConicProgram::find_var(const std::string& name) const {
    for (std::size_t i = 0; i < vars.size(); ++i)
        if (vars[i].name == name) return static_cast<int>(i);
    return -1;
}

int ConicProgram::var(const std::string& name) const {
    const int i = find_var(name);
    if (i < 0) throw ValidationError("unknown variable: " + name);
    return i;
}

bool operator==(const LinTerm& a, const LinTerm& b) { return a.var == b.var && a.coef == b.coef; }
bool operator==(const AffExpr& a, const AffExpr& b) {
    return a.terms == b.terms && a.constant == b.constant;
}
bool operator==(const Variable& a, const Variable& b) {
    return a.name == b.name && a.kind == b.kind && a.lb == b.lb && a.ub == b.ub;
}
bool operator==(const LinearConstraint& a, const LinearConstraint& b) {
    return a.name == b.name && a.expr == b.expr && a.rel == b.rel && a.rhs == b.rhs;
}
bool operator==(const SocConstraint& a, const SocConstraint& b) {
    return a.name == b.name && a.vec == b.vec && a.scalar == b.scalar;
}
bool operator==(const ConicProgram& a, const ConicProgram& b) {
    return a.model == b.model && a.instance_hash == b.instance_hash && a.vars == b.vars &&
           a.objective == b.objective && a.linear == b.linear && a.socs == b.socs;
}

std::string instance_hash(const Instance& inst) {
    const std::string text = instance_to_json(inst);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    for (int i = 15; i >= 0; --i) {
        buf[i] = "0123456789abcdef"[h & 0xf];
        h >>= 4;
    }
    buf[16] = '\0';
    return buf;
}

namespace {

// Shared construction state for the three model builders.
struct Builder {
    const Instance& inst;
    const int K;
    const Model model;
    ConicProgram prog;
    std::vector<DemandUnit> units;
    std::vector<int> x, k;              // var ids per facility
    std::vector<std::vector<int>> y;    // [unit][facility]

    Builder(const Instance& inst_, int K_, Model model_)
        : inst(inst_), K(K_), model(model_), units(demand_units(inst_, model_)) {
        prog.model = to_string(model_);
        prog.instance_hash = instance_hash(inst_);
    }

    std::string yname(int u, int j) const {
        const DemandUnit& du = units[u];
        return model == Model::SP ? "y" + idx(du.node, du.cls, j) : "y" + idx(du.node, j);
    }
    std::string uidx(int u, int j) const {
        const DemandUnit& du = units[u];
        return model == Model::SP ? idx(du.node, du.cls, j) : idx(du.node, j);
    }

    void add_structural_vars() {
        const int J = inst.num_facilities();
        x.resize(J);
        k.resize(J);
        y.assign(units.size(), std::vector<int>(J));
        for (int j = 0; j < J; ++j) x[j] = prog.add_var("x" + idx(j), VarKind::Binary, 0, 1);
        for (std::size_t u = 0; u < units.size(); ++u)
            for (int j = 0; j < J; ++j)
                y[u][j] = prog.add_var(yname(static_cast<int>(u), j), VarKind::Binary, 0, 1);
        for (int j = 0; j < J; ++j) k[j] = prog.add_var("k" + idx(j), VarKind::Integer, 0, K);
    }

    // Constraints shared by all three models: single assignment, open
    // facilities only, endurance, nominal load vs drones, budget.
    void add_structural_constraints() {
        const int J = inst.num_facilities();
        for (std::size_t u = 0; u < units.size(); ++u) {
            LinearConstraint c;
            c.name = "assign" + (model == Model::SP ? idx(units[u].node, units[u].cls)
                                                    : idx(units[u].node));
            for (int j = 0; j < J; ++j) c.expr.add(y[u][j], 1.0);
            c.rel = Rel::EQ;
            c.rhs = 1;
            prog.linear.push_back(std::move(c));
        }
        for (std::size_t u = 0; u < units.size(); ++u)
            for (int j = 0; j < J; ++j) {
                LinearConstraint c;
                c.name = "open" + uidx(static_cast<int>(u), j);
                c.expr.add(y[u][j], 1.0).add(x[j], -1.0);
                c.rel = Rel::LE;
                c.rhs = 0;
                prog.linear.push_back(std::move(c));
            }
        for (std::size_t u = 0; u < units.size(); ++u)
            for (int j = 0; j < J; ++j) {
                LinearConstraint c;
                c.name = "reach" + uidx(static_cast<int>(u), j);
                c.expr.add(y[u][j], inst.travel(units[u].node, j));
                c.rel = Rel::LE;
                c.rhs = inst.fleet.endurance_min;
                prog.linear.push_back(std::move(c));
            }
        for (int j = 0; j < J; ++j) {
            LinearConstraint c;
            c.name = "load" + idx(j);
            for (std::size_t u = 0; u < units.size(); ++u)
                c.expr.add(y[u][j], units[u].rate * inst.service_time(units[u].node, j));
            c.expr.add(k[j], -1.0);
            c.rel = Rel::LE;
            c.rhs = 0;
            prog.linear.push_back(std::move(c));
        }
        for (int j = 0; j < J; ++j) {
            LinearConstraint c;
            c.name = "klink" + idx(j);
            c.expr.add(k[j], 1.0).add(x[j], -static_cast<double>(K));
            c.rel = Rel::LE;
            c.rhs = 0;
            prog.linear.push_back(std::move(c));
        }
        LinearConstraint b;
        b.name = "budget";
        for (int j = 0; j < J; ++j) b.expr.add(k[j], 1.0);
        b.rel = Rel::LE;
        b.rhs = K;
        prog.linear.push_back(std::move(b));
    }

    // Load of facility j over classes <= cls_limit (-1 means every class,
    // 0 means the empty prefix).
    AffExpr load_expr(int j, int cls_limit) const {
        AffExpr e;
        for (std::size_t u = 0; u < units.size(); ++u)
            if (cls_limit < 0 || units[u].cls <= cls_limit)
                e.add(y[u][j], units[u].rate * inst.service_time(units[u].node, j));
        return e;
    }

    static AffExpr scaled(const AffExpr& e, double s) {
        AffExpr out;
        out.constant = e.constant * s;
        for (const LinTerm& t : e.terms) out.terms.push_back({t.var, t.coef * s});
        return out;
    }

    // ||[entries; D - w]|| <= D + w where D = k_j - load (affine).
    void add_wait_cone(const std::string& name, int j, int w_var,
                       const std::vector<AffExpr>& entries, const AffExpr& load) {
        SocConstraint c;
        c.name = name;
        c.vec = entries;
        AffExpr last = scaled(load, -1.0);
        last.terms.insert(last.terms.begin(), {k[j], 1.0});
        AffExpr scalar = last;
        last.add(w_var, -1.0);
        scalar.add(w_var, 1.0);
        c.vec.push_back(std::move(last));
        c.scalar = std::move(scalar);
        prog.socs.push_back(std::move(c));
    }

    // ||[2 y; theta - beta]|| <= theta + beta  (theta*beta >= y^2)
    void add_link_cone(const std::string& name, int y_var, int theta, int beta) {
        SocConstraint c;
        c.name = name;
        c.vec.resize(2);
        c.vec[0].add(y_var, 2.0);
        c.vec[1].add(theta, 1.0).add(beta, -1.0);
        c.scalar.add(theta, 1.0).add(beta, 1.0);
        prog.socs.push_back(std::move(c));
    }

    // ||[2 beta; 1 - D]|| <= 1 + D where D = k_j - load  (beta^2 <= D)
    void add_cap_cone(const std::string& name, int j, int beta, const AffExpr& load) {
        SocConstraint c;
        c.name = name;
        c.vec.resize(2);
        c.vec[0].add(beta, 2.0);
        c.vec[1] = scaled(load, 1.0);
        c.vec[1].constant += 1.0;
        c.vec[1].terms.insert(c.vec[1].terms.begin(), {k[j], -1.0});
        c.scalar = scaled(load, -1.0);
        c.scalar.constant += 1.0;
        c.scalar.terms.insert(c.scalar.terms.begin(), {k[j], 1.0});
        prog.socs.push_back(std::move(c));
    }

    void add_epigraph(const std::string& name, int u, int j, int w_var, int z_var) {
        LinearConstraint c;
        c.name = name;
        c.expr.add(y[u][j], inst.travel(units[u].node, j)).add(w_var, 1.0).add(z_var, -1.0);
        c.rel = Rel::LE;
        c.rhs = 0;
        prog.linear.push_back(std::move(c));
    }
};

}  // namespace

ConicProgram build_np(const Instance& inst, int K) {
    Builder b(inst, K, Model::NP);
    const int J = inst.num_facilities();
    const int I = static_cast<int>(b.units.size());
    b.add_structural_vars();

    std::vector<int> W(J);
    for (int j = 0; j < J; ++j) W[j] = b.prog.add_var("W" + idx(j), VarKind::Continuous, 0, kInf);
    const int Z = b.prog.add_var("Z", VarKind::Continuous, 0, kInf);
    std::vector<std::vector<int>> theta(I, std::vector<int>(J)), beta(I, std::vector<int>(J));
    for (int u = 0; u < I; ++u)
        for (int j = 0; j < J; ++j)
            theta[u][j] =
                b.prog.add_var("theta" + idx(b.units[u].node, j), VarKind::Continuous, 0, kInf);
    for (int u = 0; u < I; ++u)
        for (int j = 0; j < J; ++j)
            beta[u][j] =
                b.prog.add_var("beta" + idx(b.units[u].node, j), VarKind::Continuous, 0, kInf);

    b.prog.objective.add(Z, 1.0);
    b.add_structural_constraints();
    for (int u = 0; u < I; ++u)
        for (int j = 0; j < J; ++j)
            b.add_epigraph("epi" + idx(b.units[u].node, j), u, j, W[j], Z);

    for (int j = 0; j < J; ++j) {
        std::vector<AffExpr> entries(I);
        for (int u = 0; u < I; ++u)
            entries[u].add(theta[u][j],
                           std::sqrt(2.0 * b.units[u].rate) * inst.service_time(b.units[u].node, j));
        b.add_wait_cone("wo" + idx(j), j, W[j], entries, b.load_expr(j, -1));
    }
    for (int u = 0; u < I; ++u)
        for (int j = 0; j < J; ++j)
            b.add_link_cone("a" + idx(b.units[u].node, j), b.y[u][j], theta[u][j], beta[u][j]);
    for (int u = 0; u < I; ++u)
        for (int j = 0; j < J; ++j)
            b.add_cap_cone("ak" + idx(b.units[u].node, j), j, beta[u][j], AffExpr{});
    return b.prog;
}

ConicProgram build_sp(const Instance& inst, int K) {
    Builder b(inst, K, Model::SP);
    const int J = inst.num_facilities();
    const int U = static_cast<int>(b.units.size());
    const int R = inst.num_classes();
    b.add_structural_vars();

    std::vector<std::vector<int>> W(J, std::vector<int>(R));
    for (int j = 0; j < J; ++j)
        for (int r = 1; r <= R; ++r)
            W[j][r - 1] = b.prog.add_var("W" + idx(j, r), VarKind::Continuous, 0, kInf);
    std::vector<int> Z(R);
    for (int r = 1; r <= R; ++r) Z[r - 1] = b.prog.add_var("Z" + idx(r), VarKind::Continuous, 0, kInf);

    // Auxiliaries carry the target class r because the denominator shift
    // k_j - (load of classes < r) differs per class being bounded.
    auto aux_name = [&](const char* stem, int u, int j, int r) {
        return stem + idx(b.units[u].node, b.units[u].cls, j, r);
    };
    std::vector<std::vector<std::vector<int>>> theta(U), beta(U);
    for (int u = 0; u < U; ++u) {
        theta[u].assign(J, std::vector<int>(R));
        for (int j = 0; j < J; ++j)
            for (int r = 1; r <= R; ++r)
                theta[u][j][r - 1] =
                    b.prog.add_var(aux_name("theta", u, j, r), VarKind::Continuous, 0, kInf);
    }
    for (int u = 0; u < U; ++u) {
        beta[u].assign(J, std::vector<int>(R));
        for (int j = 0; j < J; ++j)
            for (int r = 1; r <= R; ++r)
                beta[u][j][r - 1] =
                    b.prog.add_var(aux_name("beta", u, j, r), VarKind::Continuous, 0, kInf);
    }

    for (int r = 1; r <= R; ++r) b.prog.objective.add(Z[r - 1], inst.priority.weights[r - 1]);
    b.add_structural_constraints();
    for (int u = 0; u < U; ++u)
        for (int j = 0; j < J; ++j)
            b.add_epigraph("epi" + b.uidx(u, j), u, j, W[j][b.units[u].cls - 1],
                           Z[b.units[u].cls - 1]);

    for (int j = 0; j < J; ++j)
        for (int r = 1; r <= R; ++r) {
            std::vector<AffExpr> entries(U);
            for (int u = 0; u < U; ++u)
                entries[u].add(theta[u][j][r - 1], std::sqrt(2.0 * b.units[u].rate) *
                                                       inst.service_time(b.units[u].node, j));
            b.add_wait_cone("wo" + idx(j, r), j, W[j][r - 1], entries, b.load_expr(j, r));
        }
    for (int u = 0; u < U; ++u)
        for (int j = 0; j < J; ++j)
            for (int r = 1; r <= R; ++r)
                b.add_link_cone(aux_name("a", u, j, r), b.y[u][j], theta[u][j][r - 1],
                                beta[u][j][r - 1]);
    for (int u = 0; u < U; ++u)
        for (int j = 0; j < J; ++j)
            for (int r = 1; r <= R; ++r)
                b.add_cap_cone(aux_name("ak", u, j, r), j, beta[u][j][r - 1],
                               b.load_expr(j, r - 1));
    return b.prog;
}

ConicProgram build_dp(const Instance& inst, int K) {
    if (inst.mode != Mode::DP)
        throw ValidationError("dynamic priority requires an instance with fixed classes");
    Builder b(inst, K, Model::DP);
    const int J = inst.num_facilities();
    const int I = static_cast<int>(b.units.size());
    const int R = inst.num_classes();
    b.add_structural_vars();

    std::vector<int> W(J);
    for (int j = 0; j < J; ++j) W[j] = b.prog.add_var("W" + idx(j), VarKind::Continuous, 0, kInf);
    std::vector<std::vector<int>> Wr(J, std::vector<int>(R + 1, -1));
    for (int j = 0; j < J; ++j)
        for (int r = 2; r <= R; ++r)
            Wr[j][r] = b.prog.add_var("W" + idx(j, r), VarKind::Continuous, 0, kInf);
    std::vector<int> Z(R);
    for (int r = 1; r <= R; ++r) Z[r - 1] = b.prog.add_var("Z" + idx(r), VarKind::Continuous, 0, kInf);
    std::vector<std::vector<int>> theta(I, std::vector<int>(J)), beta(I, std::vector<int>(J));
    for (int u = 0; u < I; ++u)
        for (int j = 0; j < J; ++j)
            theta[u][j] = b.prog.add_var("theta" + idx(u, j), VarKind::Continuous, 0, kInf);
    for (int u = 0; u < I; ++u)
        for (int j = 0; j < J; ++j)
            beta[u][j] = b.prog.add_var("beta" + idx(u, j), VarKind::Continuous, 0, kInf);
    std::vector<std::vector<int>> Q(J, std::vector<int>(R + 1));
    for (int j = 0; j < J; ++j)
        for (int r = 1; r <= R; ++r)
            Q[j][r] = b.prog.add_var("Q" + idx(j, r), VarKind::Continuous, 0, kInf);

    // pi/p pairs exist per (source node i, class-r node l, facility j) with a
    // positive travel product; h = lambda_i lambda_l t_ij t_lj scales them.
    struct PiVar {
        int i, l, j, r;
        int pi = -1, p = -1;
        double h = 0;
    };
    std::vector<PiVar> pairs;
    for (int j = 0; j < J; ++j)
        for (int r = 1; r <= R; ++r)
            for (int i = 0; i < I; ++i)
                for (int l = 0; l < I; ++l) {
                    if (inst.nodes[l].fixed_class != r) continue;
                    const double h = inst.nodes[i].lambda * inst.nodes[l].lambda *
                                     inst.service_time(i, j) * inst.service_time(l, j);
                    if (h <= 0) continue;
                    pairs.push_back({i, l, j, r, -1, -1, h});
                }
    for (PiVar& pv : pairs)
        pv.pi = b.prog.add_var("pi" + idx(pv.i, pv.l, pv.j, pv.r), VarKind::Continuous, 0, kInf);
    for (PiVar& pv : pairs)
        pv.p = b.prog.add_var("p" + idx(pv.i, pv.l, pv.j, pv.r), VarKind::Continuous, 0, kInf);

    for (int r = 1; r <= R; ++r) b.prog.objective.add(Z[r - 1], inst.priority.weights[r - 1]);
    b.add_structural_constraints();
    for (int u = 0; u < I; ++u)
        for (int j = 0; j < J; ++j) {
            const int cls = b.units[u].cls;
            b.add_epigraph("epi" + idx(u, j), u, j, cls == 1 ? W[j] : Wr[j][cls], Z[cls - 1]);
        }

    // W_jr = W_j + sum_{l<r} (a_l - a_r) Q_jl
    for (int j = 0; j < J; ++j)
        for (int r = 2; r <= R; ++r) {
            LinearConstraint c;
            c.name = "wlink" + idx(j, r);
            c.expr.add(Wr[j][r], 1.0).add(W[j], -1.0);
            for (int l = 1; l < r; ++l)
                c.expr.add(Q[j][l], -inst.priority.delta_a(l - 1, r - 1));
            c.rel = Rel::EQ;
            c.rhs = 0;
            b.prog.linear.push_back(std::move(c));
        }

    for (int j = 0; j < J; ++j) {
        std::vector<AffExpr> entries(I);
        for (int u = 0; u < I; ++u)
            entries[u].add(theta[u][j],
                           std::sqrt(2.0 * b.units[u].rate) * inst.service_time(b.units[u].node, j));
        b.add_wait_cone("wo" + idx(j), j, W[j], entries, b.load_expr(j, -1));
    }
    for (int u = 0; u < I; ++u)
        for (int j = 0; j < J; ++j)
            b.add_link_cone("a" + idx(u, j), b.y[u][j], theta[u][j], beta[u][j]);
    for (int u = 0; u < I; ++u)
        for (int j = 0; j < J; ++j) b.add_cap_cone("ak" + idx(u, j), j, beta[u][j], AffExpr{});

    // k_j Q_jr >= sum pi^2  as  ||[2 pi...; Q - k]|| <= Q + k
    for (int j = 0; j < J; ++j)
        for (int r = 1; r <= R; ++r) {
            SocConstraint c;
            c.name = "qk" + idx(j, r);
            for (const PiVar& pv : pairs)
                if (pv.j == j && pv.r == r) {
                    AffExpr e;
                    e.add(pv.pi, 2.0);
                    c.vec.push_back(std::move(e));
                }
            AffExpr last;
            last.add(Q[j][r], 1.0).add(b.k[j], -1.0);
            c.vec.push_back(std::move(last));
            c.scalar.add(Q[j][r], 1.0).add(b.k[j], 1.0);
            b.prog.socs.push_back(std::move(c));
        }
    // p pi >= y_ij^2 when y_lj = 1:  ||[2 y_ij; p - pi]|| <= p + pi + 2(1 - y_lj)
    for (const PiVar& pv : pairs) {
        SocConstraint c;
        c.name = "yp" + idx(pv.i, pv.l, pv.j, pv.r);
        c.vec.resize(2);
        c.vec[0].add(b.y[pv.i][pv.j], 2.0);
        c.vec[1].add(pv.p, 1.0).add(pv.pi, -1.0);
        c.scalar.add(pv.p, 1.0).add(pv.pi, 1.0).add(b.y[pv.l][pv.j], -2.0);
        c.scalar.constant = 2.0;
        b.prog.socs.push_back(std::move(c));
    }
    // p^2 <= k_j y_lj / h  as  ||[2 p; k - y/h]|| <= k + y/h
    for (const PiVar& pv : pairs) {
        SocConstraint c;
        c.name = "pk" + idx(pv.i, pv.l, pv.j, pv.r);
        c.vec.resize(2);
        c.vec[0].add(pv.p, 2.0);
        c.vec[1].add(b.k[pv.j], 1.0).add(b.y[pv.l][pv.j], -1.0 / pv.h);
        c.scalar.add(b.k[pv.j], 1.0).add(b.y[pv.l][pv.j], 1.0 / pv.h);
        b.prog.socs.push_back(std::move(c));
    }
    return b.prog;
}

FeasibilityReport check_point(const ConicProgram& prog, const std::vector<double>& point) {
    if (point.size() != prog.vars.size())
        throw ValidationError("point size does not match variable count");
    FeasibilityReport rep;
    auto flag = [&rep](const std::string& name, double mag) {
        if (mag > 0) rep.violations.push_back({name, mag});
    };
    for (std::size_t i = 0; i < prog.vars.size(); ++i) {
        const Variable& v = prog.vars[i];
        const double outside = std::max(v.lb - point[i], point[i] - v.ub);
        if (outside > kLinearTol) flag("bound:" + v.name, outside);
        if (v.kind != VarKind::Continuous) {
            const double frac = std::abs(point[i] - std::round(point[i]));
            if (frac > kLinearTol) flag("integrality:" + v.name, frac);
        }
    }
    for (const LinearConstraint& c : prog.linear) {
        const double lhs = c.expr.eval(point);
        double viol = 0;
        if (c.rel == Rel::LE) viol = lhs - c.rhs;
        if (c.rel == Rel::GE) viol = c.rhs - lhs;
        if (c.rel == Rel::EQ) viol = std::abs(lhs - c.rhs);
        if (viol > kLinearTol) flag(c.name, viol);
    }
    for (const SocConstraint& c : prog.socs) {
        double ss = 0;
        for (const AffExpr& e : c.vec) {
            const double v = e.eval(point);
            ss += v * v;
        }
        const double viol = std::sqrt(ss) - c.scalar.eval(point);
        if (viol > kSocTol) flag(c.name, viol);
    }
    return rep;
}

double FeasibilityReport::max_violation() const {
    double m = 0;
    for (const Violation& v : violations) m = std::max(m, v.magnitude);
    return m;
}

std::vector<double> integer_point(const ConicProgram& prog, const Instance& inst,
                                  const Assignment& asg) {
    std::vector<double> pt(prog.vars.size(), 0.0);
    const Model model = model_from_string(prog.model);
    const auto units = demand_units(inst, model);
    for (int j = 0; j < inst.num_facilities(); ++j) {
        pt[prog.var("x" + idx(j))] = asg.open[j] ? 1.0 : 0.0;
        pt[prog.var("k" + idx(j))] = asg.drones[j];
    }
    for (std::size_t u = 0; u < units.size(); ++u) {
        const int j = asg.unit_facility[u];
        const std::string name = model == Model::SP ? "y" + idx(units[u].node, units[u].cls, j)
                                                    : "y" + idx(units[u].node, j);
        pt[prog.var(name)] = 1.0;
    }
    return pt;
}

namespace {

// The epigraph rows run over every facility, so each Z must also cover the
// waits of open facilities its class never routes to. Reading Z off the rows
// keeps the witness feasible whatever the routing looks like.
void raise_z_to_epigraph(const ConicProgram& prog, std::vector<double>& pt) {
    for (const LinearConstraint& c : prog.linear) {
        if (!has_prefix(c.name, "epi")) continue;
        int z = -1;
        double rest = 0;
        for (const auto& t : c.expr.terms) {
            if (prog.vars[t.var].name[0] == 'Z')
                z = t.var;
            else
                rest += t.coef * pt[t.var];
        }
        rest += c.expr.constant - c.rhs;
        if (z >= 0) pt[z] = std::max(pt[z], rest);
    }
}

}  // namespace

std::vector<double> witness_point(const ConicProgram& prog, const Instance& inst,
                                  const Assignment& asg) {
    std::vector<double> pt = integer_point(prog, inst, asg);
    const Model model = model_from_string(prog.model);
    const auto units = demand_units(inst, model);
    const QueueAnalytics qa = analyze(inst, asg);
    const int J = inst.num_facilities();
    const int R = inst.num_classes();

    if (model == Model::NP) {
        for (int j = 0; j < J; ++j) pt[prog.var("W" + idx(j))] = qa.facility[j].wait_r[0];
        for (std::size_t u = 0; u < units.size(); ++u)
            for (int j = 0; j < J; ++j) {
                const double yv = asg.unit_facility[u] == j ? 1.0 : 0.0;
                const double kj = asg.drones[j];
                pt[prog.var("beta" + idx(units[u].node, j))] = yv * std::sqrt(kj);
                pt[prog.var("theta" + idx(units[u].node, j))] = kj > 0 ? yv / std::sqrt(kj) : 0.0;
            }
        raise_z_to_epigraph(prog, pt);
        return pt;
    }

    if (model == Model::SP) {
        for (int j = 0; j < J; ++j)
            for (int r = 1; r <= R; ++r)
                pt[prog.var("W" + idx(j, r))] = qa.facility[j].wait_r[r - 1];
        for (std::size_t u = 0; u < units.size(); ++u)
            for (int j = 0; j < J; ++j) {
                // Shifted slack for class r: drones minus load of classes < r.
                double cum = 0;
                for (int r = 1; r <= R; ++r) {
                    const double yv = asg.unit_facility[u] == j ? 1.0 : 0.0;
                    const double slack = asg.drones[j] - cum;
                    const double beta = yv * std::sqrt(std::max(0.0, slack));
                    pt[prog.var("beta" + idx(units[u].node, units[u].cls, j, r))] = beta;
                    pt[prog.var("theta" + idx(units[u].node, units[u].cls, j, r))] =
                        beta > 0 ? yv / std::sqrt(slack) : 0.0;
                    cum += qa.facility[j].load_r[r - 1];
                }
            }
        raise_z_to_epigraph(prog, pt);
        return pt;
    }

    for (int j = 0; j < J; ++j) {
        pt[prog.var("W" + idx(j))] = qa.facility[j].wait_fcfs;
        for (int r = 2; r <= R; ++r) pt[prog.var("W" + idx(j, r))] = qa.facility[j].wait_r[r - 1];
        const double kj = asg.drones[j];
        for (int r = 1; r <= R; ++r)
            pt[prog.var("Q" + idx(j, r))] =
                kj > 0 ? qa.facility[j].load * qa.facility[j].load_r[r - 1] / (kj * kj) : 0.0;
    }
    for (std::size_t u = 0; u < units.size(); ++u)
        for (int j = 0; j < J; ++j) {
            const double yv = asg.unit_facility[u] == j ? 1.0 : 0.0;
            const double kj = asg.drones[j];
            pt[prog.var("beta" + idx(static_cast<int>(u), j))] = yv * std::sqrt(kj);
            pt[prog.var("theta" + idx(static_cast<int>(u), j))] = kj > 0 ? yv / std::sqrt(kj) : 0.0;
        }
    for (std::size_t idx_v = 0; idx_v < prog.vars.size(); ++idx_v) {
        const std::string& name = prog.vars[idx_v].name;
        if (!has_prefix(name, "pi") && !has_prefix(name, "p")) continue;
        const auto ids = bracket_indices(name);
        if (ids.size() != 4) continue;
        const int i = ids[0], l = ids[1], j = ids[2];
        const double h = inst.nodes[i].lambda * inst.nodes[l].lambda * inst.service_time(i, j) *
                         inst.service_time(l, j);
        if (h <= 0) continue;
        const double kj = asg.drones[j];
        const double y_ij = asg.unit_facility[i] == j ? 1.0 : 0.0;
        const double y_lj = asg.unit_facility[l] == j ? 1.0 : 0.0;
        if (has_prefix(name, "pi"))
            pt[idx_v] = kj > 0 ? y_ij * y_lj * std::sqrt(h / kj) : 0.0;
        else
            pt[idx_v] = y_lj * std::sqrt(kj / h);
    }
    raise_z_to_epigraph(prog, pt);
    return pt;
}

namespace {

double eval_pair_product(const SocConstraint& c, const std::vector<double>& pt) {
    // ||[2 v; u1 - u2]|| <= u1 + u2 encodes v^2 <= u1 u2; returns u1 u2.
    const double diff = c.vec[1].eval(pt);
    const double sum = c.scalar.eval(pt);
    return ((sum + diff) / 2.0) * ((sum - diff) / 2.0);
}

int single_var_of(const AffExpr& e) { return e.terms.at(0).var; }

}  // namespace

std::vector<std::vector<double>> minimal_w_via_cones(const ConicProgram& prog,
                                                     const std::vector<double>& point) {
    if (point.size() != prog.vars.size())
        throw ValidationError("point size does not match variable count");
    std::vector<double> pt = point;
    // Only the integer coordinates matter; continuous ones are re-derived.
    for (std::size_t i = 0; i < prog.vars.size(); ++i)
        if (prog.vars[i].kind == VarKind::Continuous) pt[i] = 0.0;

    int J = 0, R = 1;
    for (const Variable& v : prog.vars) {
        if (has_prefix(v.name, "x")) ++J;
        if (has_prefix(v.name, "Z")) R = std::max(R, bracket_indices(v.name)[0]);
    }
    std::vector<std::vector<double>> result(J, std::vector<double>(prog.model == "sp" ? R : 1, 0.0));
    if (prog.model == "dp") result.assign(J, std::vector<double>(R, 0.0));

    auto kval = [&](int j) { return pt[prog.var("k" + idx(j))]; };
    auto facility_of = [&](const SocConstraint& c) {
        const auto ids = bracket_indices(c.name);
        return prog.model == "np" ? ids.back() : ids[ids.size() - 2];
    };

    // beta = sqrt(slack) from its cap cone; cap cones carry no other unknowns.
    for (const SocConstraint& c : prog.socs) {
        if (!has_prefix(c.name, "ak")) continue;
        const double slack = (c.scalar.eval(pt) - c.vec[1].eval(pt)) / 2.0;
        pt[single_var_of(c.vec[0])] = std::sqrt(std::max(0.0, slack));
    }
    // theta = y^2 / beta from the linking cone.
    for (const SocConstraint& c : prog.socs) {
        if (!has_prefix(c.name, "a")) continue;
        const double yv = c.vec[0].eval(pt) / 2.0;
        int theta_var = -1, beta_var = -1;
        for (const LinTerm& t : c.vec[1].terms) (t.coef > 0 ? theta_var : beta_var) = t.var;
        const double beta = pt[beta_var];
        if (yv * yv <= 0) {
            pt[theta_var] = 0.0;
        } else if (beta <= 0) {
            const auto ids = bracket_indices(c.name);
            const int j = prog.model == "sp" ? ids[2] : ids[1];
            throw StabilityError(j, yv, kval(j));
        } else {
            pt[theta_var] = (yv * yv) / beta;
        }
    }
    // W = sum(entries^2) / (4 * slack) from the wait cone.
    for (const SocConstraint& c : prog.socs) {
        if (!has_prefix(c.name, "wo")) continue;
        double ss = 0;
        for (std::size_t e = 0; e + 1 < c.vec.size(); ++e) {
            const double v = c.vec[e].eval(pt);
            ss += v * v;
        }
        const double slack = (c.vec.back().eval(pt) + c.scalar.eval(pt)) / 2.0;
        const auto ids = bracket_indices(c.name);
        const int j = ids[0];
        double w = 0;
        if (ss > 0) {
            if (slack <= 0) throw StabilityError(j, kval(j) - slack, kval(j));
            w = ss / (4.0 * slack);
        }
        if (prog.model == "sp") {
            result[j][ids[1] - 1] = w;
        } else {
            result[j][0] = w;
            pt[prog.var("W" + idx(j))] = w;
        }
    }
    if (prog.model != "dp") return result;

    // p from its cap cone, then pi from the guarded linking cone.
    for (const SocConstraint& c : prog.socs) {
        if (!has_prefix(c.name, "pk")) continue;
        pt[single_var_of(c.vec[0])] = std::sqrt(std::max(0.0, eval_pair_product(c, pt)));
    }
    for (const SocConstraint& c : prog.socs) {
        if (!has_prefix(c.name, "yp")) continue;
        const double yv = c.vec[0].eval(pt) / 2.0;
        int pi_var = -1, p_var = -1;
        for (const LinTerm& t : c.vec[1].terms) (t.coef < 0 ? pi_var : p_var) = t.var;
        const double p = pt[p_var];
        const double sigma0 = c.scalar.eval(pt);  // pi currently 0
        if (yv <= 0) {
            pt[pi_var] = 0.0;
            continue;
        }
        if (sigma0 + p <= 0) throw StabilityError(facility_of(c), yv, 0.0);
        pt[pi_var] = std::max(0.0, (4.0 * yv * yv + p * p - sigma0 * sigma0) / (2.0 * (sigma0 + p)));
    }
    // Q = sum(pi^2) / k from its cone.
    for (const SocConstraint& c : prog.socs) {
        if (!has_prefix(c.name, "qk")) continue;
        double ss = 0;
        for (std::size_t e = 0; e + 1 < c.vec.size(); ++e) {
            const double v = c.vec[e].eval(pt);
            ss += v * v;
        }
        const auto ids = bracket_indices(c.name);
        const double kj = (c.scalar.eval(pt) - c.vec.back().eval(pt)) / 2.0;
        double q = 0;
        if (ss > 0) {
            if (kj <= 0) throw StabilityError(ids[0], ss, kj);
            q = ss / (4.0 * kj);
        }
        pt[prog.var("Q" + idx(ids[0], ids[1]))] = q;
    }
    // W_jr from the linear link rows.
    for (const LinearConstraint& c : prog.linear) {
        if (!has_prefix(c.name, "wlink")) continue;
        const auto ids = bracket_indices(c.name);
        const int w_var = prog.var("W" + idx(ids[0], ids[1]));
        double rest = c.expr.constant;
        for (const LinTerm& t : c.expr.terms)
            if (t.var != w_var) rest += t.coef * pt[t.var];
        const double w = c.rhs - rest;
        pt[w_var] = w;
        result[ids[0]][ids[1] - 1] = w;
    }
    return result;
}

namespace {

std::string fmt(double v) {
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& tok) {
    if (tok == "inf") return kInf;
    if (tok == "-inf") return -kInf;
    double v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw ParseError("bad number: " + tok);
    return v;
}

void emit_expr(std::ostream& os, const AffExpr& e) {
    os << ' ' << fmt(e.constant) << ' ' << e.terms.size();
    for (const LinTerm& t : e.terms) os << ' ' << t.var << ' ' << fmt(t.coef);
}

const char* rel_name(Rel r) { return r == Rel::LE ? "LE" : (r == Rel::GE ? "GE" : "EQ"); }

std::string emit_cbf(const ConicProgram& p) {
    std::ostringstream os;
    os << "DRONEQCONIC 1\n";
    os << "MODEL " << p.model << "\n";
    os << "HASH " << p.instance_hash << "\n";
    os << "OBJSENSE MIN\n";
    os << "VARS " << p.vars.size() << "\n";
    for (const Variable& v : p.vars) {
        const char kind = v.kind == VarKind::Binary ? 'B' : (v.kind == VarKind::Integer ? 'I' : 'C');
        os << v.name << ' ' << kind << ' ' << fmt(v.lb) << ' ' << fmt(v.ub) << "\n";
    }
    os << "OBJ";
    emit_expr(os, p.objective);
    os << "\n";
    os << "LIN " << p.linear.size() << "\n";
    for (const LinearConstraint& c : p.linear) {
        os << c.name << ' ' << rel_name(c.rel) << ' ' << fmt(c.rhs);
        emit_expr(os, c.expr);
        os << "\n";
    }
    os << "SOC " << p.socs.size() << "\n";
    for (const SocConstraint& c : p.socs) {
        os << c.name << ' ' << c.vec.size() << "\n";
        for (const AffExpr& e : c.vec) {
            os << "E";
            emit_expr(os, e);
            os << "\n";
        }
        os << "S";
        emit_expr(os, c.scalar);
        os << "\n";
    }
    os << "END\n";
    return os.str();
}

void lp_terms(std::ostream& os, const AffExpr& e, const std::vector<Variable>& vars) {
    for (const LinTerm& t : e.terms) {
        const double c = t.coef;
        os << (c < 0 ? " - " : " + ") << fmt(std::abs(c)) << ' ' << vars[t.var].name;
    }
    if (e.terms.empty()) os << " + 0 " << vars.at(0).name;
}

std::string emit_lp(const ConicProgram& p) {
    std::ostringstream os;
    os << "\\ conic program: model " << p.model << ", instance " << p.instance_hash << "\n";
    os << "\\ each cone ||v|| <= s is linearized through auxiliaries soc<n>_e<i>, soc<n>_s\n";
    os << "Minimize\n obj:";
    lp_terms(os, p.objective, p.vars);
    if (p.objective.constant != 0) os << " + " << fmt(p.objective.constant);
    os << "\nSubject To\n";
    for (const LinearConstraint& c : p.linear) {
        os << ' ' << c.name << ':';
        lp_terms(os, c.expr, p.vars);
        const char* rel = c.rel == Rel::LE ? "<=" : (c.rel == Rel::GE ? ">=" : "=");
        os << ' ' << rel << ' ' << fmt(c.rhs - c.expr.constant) << "\n";
    }
    for (std::size_t s = 0; s < p.socs.size(); ++s) {
        const SocConstraint& c = p.socs[s];
        for (std::size_t e = 0; e < c.vec.size(); ++e) {
            os << " soc" << s << "_e" << e << "def: + 1 soc" << s << "_e" << e;
            lp_terms(os, Builder::scaled(c.vec[e], -1.0), p.vars);
            os << " = " << fmt(c.vec[e].constant) << "\n";
        }
        os << " soc" << s << "_sdef: + 1 soc" << s << "_s";
        lp_terms(os, Builder::scaled(c.scalar, -1.0), p.vars);
        os << " = " << fmt(c.scalar.constant) << "\n";
        os << " soc" << s << "_cone: [";
        for (std::size_t e = 0; e < c.vec.size(); ++e)
            os << (e ? " + " : " ") << "soc" << s << "_e" << e << " ^ 2";
        os << " - soc" << s << "_s ^ 2 ] <= 0\n";
    }
    os << "Bounds\n";
    for (const Variable& v : p.vars) {
        if (v.kind == VarKind::Binary) continue;
        os << ' ' << fmt(v.lb) << " <= " << v.name << " <= " << fmt(v.ub) << "\n";
    }
    for (std::size_t s = 0; s < p.socs.size(); ++s) {
        for (std::size_t e = 0; e < p.socs[s].vec.size(); ++e)
            os << " soc" << s << "_e" << e << " free\n";
        os << " 0 <= soc" << s << "_s <= inf\n";
    }
    bool any = false;
    for (const Variable& v : p.vars)
        if (v.kind == VarKind::Binary) {
            if (!any) os << "Binaries\n";
            any = true;
            os << ' ' << v.name << "\n";
        }
    any = false;
    for (const Variable& v : p.vars)
        if (v.kind == VarKind::Integer) {
            if (!any) os << "Generals\n";
            any = true;
            os << ' ' << v.name << "\n";
        }
    os << "End\n";
    return os.str();
}

// Whitespace tokenizer with line tracking for parse errors.
struct Tokens {
    std::istringstream in;
    explicit Tokens(const std::string& text) : in(text) {}
    std::string next(const char* what) {
        std::string tok;
        if (!(in >> tok)) throw ParseError(std::string("unexpected end of file, expected ") + what);
        return tok;
    }
    int next_int(const char* what) {
        return static_cast<int>(parse_double(next(what)));
    }
    double next_num(const char* what) { return parse_double(next(what)); }
    void expect(const char* literal) {
        const std::string tok = next(literal);
        if (tok != literal) throw ParseError(std::string("expected '") + literal + "', got '" + tok + "'");
    }
};

AffExpr parse_expr(Tokens& t) {
    AffExpr e;
    e.constant = t.next_num("expression constant");
    const int n = t.next_int("term count");
    for (int i = 0; i < n; ++i) {
        LinTerm term;
        term.var = t.next_int("variable index");
        term.coef = t.next_num("coefficient");
        e.terms.push_back(term);
    }
    return e;
}

}  // namespace

std::string emit(const ConicProgram& program, ConicFormat format) {
    return format == ConicFormat::Cbf ? emit_cbf(program) : emit_lp(program);
}

void emit_file(const ConicProgram& program, const std::string& path, ConicFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write conic file: " + path);
    out << emit(program, format);
}

ConicProgram parse_conic(const std::string& text) {
    Tokens t(text);
    t.expect("DRONEQCONIC");
    if (t.next("format version") != "1") throw ParseError("unsupported conic format version");
    ConicProgram p;
    t.expect("MODEL");
    p.model = t.next("model tag");
    t.expect("HASH");
    p.instance_hash = t.next("instance hash");
    t.expect("OBJSENSE");
    t.expect("MIN");
    t.expect("VARS");
    const int nvars = t.next_int("variable count");
    for (int i = 0; i < nvars; ++i) {
        Variable v;
        v.name = t.next("variable name");
        const std::string kind = t.next("variable kind");
        if (kind == "B")
            v.kind = VarKind::Binary;
        else if (kind == "I")
            v.kind = VarKind::Integer;
        else if (kind == "C")
            v.kind = VarKind::Continuous;
        else
            throw ParseError("unknown variable kind: " + kind);
        v.lb = t.next_num("lower bound");
        v.ub = t.next_num("upper bound");
        p.vars.push_back(std::move(v));
    }
    t.expect("OBJ");
    p.objective = parse_expr(t);
    t.expect("LIN");
    const int nlin = t.next_int("linear constraint count");
    for (int i = 0; i < nlin; ++i) {
        LinearConstraint c;
        c.name = t.next("constraint name");
        const std::string rel = t.next("relation");
        if (rel == "LE")
            c.rel = Rel::LE;
        else if (rel == "GE")
            c.rel = Rel::GE;
        else if (rel == "EQ")
            c.rel = Rel::EQ;
        else
            throw ParseError("unknown relation: " + rel);
        c.rhs = t.next_num("rhs");
        c.expr = parse_expr(t);
        p.linear.push_back(std::move(c));
    }
    t.expect("SOC");
    const int nsoc = t.next_int("soc count");
    for (int i = 0; i < nsoc; ++i) {
        SocConstraint c;
        c.name = t.next("cone name");
        const int nvec = t.next_int("cone vector size");
        for (int e = 0; e < nvec; ++e) {
            t.expect("E");
            c.vec.push_back(parse_expr(t));
        }
        t.expect("S");
        c.scalar = parse_expr(t);
        p.socs.push_back(std::move(c));
    }
    t.expect("END");
    auto check_refs = [nvars](const AffExpr& e) {
        for (const LinTerm& term : e.terms)
            if (term.var < 0 || term.var >= nvars)
                throw ParseError("term references unknown variable");
    };
    check_refs(p.objective);
    for (const LinearConstraint& c : p.linear) check_refs(c.expr);
    for (const SocConstraint& c : p.socs) {
        for (const AffExpr& e : c.vec) check_refs(e);
        check_refs(c.scalar);
    }
    return p;
}

ConicProgram parse_conic_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open conic file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_conic(buf.str());
}

}  // namespace droneq
