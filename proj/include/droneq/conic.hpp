#pragma once

#include <string>
#include <vector>

#include "droneq/queueing.hpp"

namespace droneq {

// Sparse affine expression over program variables (by index).
struct LinTerm {
    int var = 0;
    double coef = 0;
};

struct AffExpr {
    std::vector<LinTerm> terms;
    double constant = 0;

    AffExpr& add(int var, double coef) {
        if (coef != 0) terms.push_back({var, coef});
        return *this;
    }
    double eval(const std::vector<double>& point) const;
};

enum class VarKind { Continuous, Binary, Integer };

struct Variable {
    std::string name;
    VarKind kind = VarKind::Continuous;
    double lb = 0;
    double ub = 0;
};

enum class Rel { LE, GE, EQ };

struct LinearConstraint {
    std::string name;
    AffExpr expr;
    Rel rel = Rel::LE;
    double rhs = 0;
};

// ||vec||_2 <= scalar, every component affine.
struct SocConstraint {
    std::string name;
    std::vector<AffExpr> vec;
    AffExpr scalar;
};

struct ConicProgram {
    std::string model;          // np | sp | dp
    std::string instance_hash;  // hex digest of the instance JSON
    std::vector<Variable> vars;
    AffExpr objective;  // sense: minimize
    std::vector<LinearConstraint> linear;
    std::vector<SocConstraint> socs;

    int add_var(const std::string& name, VarKind kind, double lb, double ub);
    int var(const std::string& name) const;       // throws on unknown name
    int find_var(const std::string& name) const;  // -1 on unknown name
};

bool operator==(const LinTerm& a, const LinTerm& b);
bool operator==(const AffExpr& a, const AffExpr& b);
bool operator==(const Variable& a, const Variable& b);
bool operator==(const LinearConstraint& a, const LinearConstraint& b);
bool operator==(const SocConstraint& a, const SocConstraint& b);
bool operator==(const ConicProgram& a, const ConicProgram& b);

// Exact mixed-integer SOCP reformulations of the three location models.
// K is the total drone budget. Waiting-time variables are linked to the
// binaries through rotated-cone patterns; an external MISOCP solver or the
// closed-form back-solver below recovers the waits of module queueing.
ConicProgram build_np(const Instance& instance, int K);
ConicProgram build_sp(const Instance& instance, int K);
ConicProgram build_dp(const Instance& instance, int K);

struct Violation {
    std::string constraint;  // constraint, bound, or integrality label
    double magnitude = 0;
};

struct FeasibilityReport {
    std::vector<Violation> violations;
    bool feasible() const { return violations.empty(); }
    double max_violation() const;
};

inline constexpr double kLinearTol = 1e-7;
inline constexpr double kSocTol = 1e-7;

// Point = one value per program variable, in declaration order.
FeasibilityReport check_point(const ConicProgram& program, const std::vector<double>& point);

// Fills x, y, k from the assignment; every other coordinate is zero.
std::vector<double> integer_point(const ConicProgram& program, const Instance& instance,
                                  const Assignment& assignment);

// Full feasible witness: integers plus closed-form W and the constructive
// cone auxiliaries (theta, beta, Q, pi, p) and epigraph values.
std::vector<double> witness_point(const ConicProgram& program, const Instance& instance,
                                  const Assignment& assignment);

// Least waiting-time values compatible with the cones once the integer
// variables are fixed: per facility, one value per class (a single value
// for the FCFS model). Pure closed-form tightening, no external solver.
std::vector<std::vector<double>> minimal_w_via_cones(const ConicProgram& program,
                                                     const std::vector<double>& point);

enum class ConicFormat { Cbf, Lp };

std::string emit(const ConicProgram& program, ConicFormat format);
void emit_file(const ConicProgram& program, const std::string& path, ConicFormat format);

// Parses the CBF-style format produced by emit(); round-trips exactly.
ConicProgram parse_conic(const std::string& text);
ConicProgram parse_conic_file(const std::string& path);

std::string instance_hash(const Instance& instance);

}  // namespace droneq
