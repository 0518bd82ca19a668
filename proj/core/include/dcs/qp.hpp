#pragma once

#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dcs::qp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Term {
    int var;
    double coef;
};

/// Convex quadratic program
///
///     minimize   0.5 x'Px + q'x + c
///     subject to A x = b,  G x <= h,  lo <= x <= hi
///
/// assembled incrementally. Quadratic terms must keep P positive semidefinite.
class Problem {
public:
    int add_variable(double lo = -kInf, double hi = kInf);
    [[nodiscard]] int num_variables() const noexcept { return static_cast<int>(q_.size()); }

    void set_bounds(int var, double lo, double hi);
    [[nodiscard]] double lower_bound(int var) const { return lo_.at(static_cast<std::size_t>(var)); }
    [[nodiscard]] double upper_bound(int var) const { return hi_.at(static_cast<std::size_t>(var)); }

    void add_linear(int var, double coef);
    void add_constant(double c) noexcept { constant_ += c; }
    /// weight * x_i * x_j (i == j gives weight * x_i^2).
    void add_product(int i, int j, double weight);
    /// weight * (sum_t coef_t x_t + offset)^2, weight >= 0.
    void add_squared(std::span<const Term> terms, double offset, double weight);
    void add_squared(std::initializer_list<Term> terms, double offset, double weight) {
        add_squared(std::span<const Term>(terms.begin(), terms.size()), offset, weight);
    }

    /// Returns the row index among equalities.
    int add_equality(std::span<const Term> terms, double rhs);
    int add_equality(std::initializer_list<Term> terms, double rhs) {
        return add_equality(std::span<const Term>(terms.begin(), terms.size()), rhs);
    }
    /// sum <= rhs. Returns the row index among inequalities.
    int add_less_equal(std::span<const Term> terms, double rhs);
    int add_less_equal(std::initializer_list<Term> terms, double rhs) {
        return add_less_equal(std::span<const Term>(terms.begin(), terms.size()), rhs);
    }
    int add_greater_equal(std::initializer_list<Term> terms, double rhs);

    [[nodiscard]] double objective(const Eigen::VectorXd& x) const;

private:
    friend class Solver;
    struct Triplet {
        int row;
        int col;
        double value;
    };

    std::vector<double> lo_;
    std::vector<double> hi_;
    std::vector<double> q_;
    double constant_ = 0.0;
    std::vector<Triplet> p_;
    std::vector<Triplet> a_;
    std::vector<double> b_;
    std::vector<Triplet> g_;
    std::vector<double> h_;
};

enum class Status { Solved, MaxIterations, NumericalError };

[[nodiscard]] std::string to_string(Status s);

struct Settings {
    int max_iterations = 100;
    double feasibility_tol = 1e-9;
    double gap_tol = 1e-10;
    double regularization = 1e-10;
};

struct Solution {
    Status status = Status::NumericalError;
    Eigen::VectorXd x;
    Eigen::VectorXd eq_duals;
    Eigen::VectorXd ineq_duals;  // general inequalities only, in insertion order
    double objective = 0.0;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;

    [[nodiscard]] bool ok() const noexcept { return status == Status::Solved; }
    [[nodiscard]] double operator[](int var) const { return x[var]; }
};

/// Mehrotra predictor-corrector interior point method with a sparse LDL'
/// factorization of the regularized KKT system.
[[nodiscard]] Solution solve(const Problem& problem, const Settings& settings = {});

}  // namespace dcs::qp
