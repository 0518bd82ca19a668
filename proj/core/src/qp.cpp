#include "dcs/qp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace dcs::qp {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

void check_var(int var, int n) {
    if (var < 0 || var >= n) throw std::out_of_range("QP variable index out of range");
}

}  // namespace

int Problem::add_variable(double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("QP variable has an empty range");
    lo_.push_back(lo);
    hi_.push_back(hi);
    q_.push_back(0.0);
    return static_cast<int>(q_.size()) - 1;
}

void Problem::set_bounds(int var, double lo, double hi) {
    check_var(var, num_variables());
    if (lo > hi) throw std::invalid_argument("QP variable has an empty range");
    lo_[static_cast<std::size_t>(var)] = lo;
    hi_[static_cast<std::size_t>(var)] = hi;
}

void Problem::add_linear(int var, double coef) {
    check_var(var, num_variables());
    q_[static_cast<std::size_t>(var)] += coef;
}

void Problem::add_product(int i, int j, double weight) {
    check_var(i, num_variables());
    check_var(j, num_variables());
    if (i == j) {
        p_.push_back({i, i, 2.0 * weight});
    } else {
        p_.push_back({i, j, weight});
        p_.push_back({j, i, weight});
    }
}

void Problem::add_squared(std::span<const Term> terms, double offset, double weight) {
    if (weight < 0.0) throw std::invalid_argument("squared terms need a nonnegative weight");
    for (std::size_t a = 0; a < terms.size(); ++a) {
        add_linear(terms[a].var, 2.0 * weight * offset * terms[a].coef);
        for (std::size_t c = 0; c < terms.size(); ++c) {
            check_var(terms[c].var, num_variables());
            p_.push_back({terms[a].var, terms[c].var, 2.0 * weight * terms[a].coef * terms[c].coef});
        }
    }
    constant_ += weight * offset * offset;
}

int Problem::add_equality(std::span<const Term> terms, double rhs) {
    const int row = static_cast<int>(b_.size());
    for (const auto& t : terms) {
        check_var(t.var, num_variables());
        a_.push_back({row, t.var, t.coef});
    }
    b_.push_back(rhs);
    return row;
}

int Problem::add_less_equal(std::span<const Term> terms, double rhs) {
    const int row = static_cast<int>(h_.size());
    for (const auto& t : terms) {
        check_var(t.var, num_variables());
        g_.push_back({row, t.var, t.coef});
    }
    h_.push_back(rhs);
    return row;
}

int Problem::add_greater_equal(std::initializer_list<Term> terms, double rhs) {
    std::vector<Term> negated;
    negated.reserve(terms.size());
    for (const auto& t : terms) negated.push_back({t.var, -t.coef});
    return add_less_equal(negated, -rhs);
}

double Problem::objective(const Eigen::VectorXd& x) const {
    double v = constant_;
    for (std::size_t i = 0; i < q_.size(); ++i) v += q_[i] * x[static_cast<Eigen::Index>(i)];
    for (const auto& t : p_) v += 0.5 * t.value * x[t.row] * x[t.col];
    return v;
}

std::string to_string(Status s) {
    switch (s) {
        case Status::Solved: return "solved";
        case Status::MaxIterations: return "max-iterations";
        case Status::NumericalError: return "numerical-error";
    }
    return "unknown";
}

class Solver {
public:
    Solver(const Problem& pr, const Settings& st) : pr_(pr), st_(st) { assemble(); }

    Solution run();

private:
    void assemble();
    bool factor(const Vec& w);
    bool factor(const Vec& w, double reg);
    Vec solve_kkt(const Vec& rhs) const;

    const Problem& pr_;
    const Settings& st_;
    int n_ = 0;
    int p_ = 0;
    int m_ = 0;
    int m_general_ = 0;
    SpMat P_, A_, G_, Gt_, K0_;
    Vec q_, b_, h_;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
    bool analyzed_ = false;
};

void Solver::assemble() {
    n_ = pr_.num_variables();
    q_ = Eigen::Map<const Vec>(pr_.q_.data(), n_);

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(pr_.p_.size());
    for (const auto& t : pr_.p_) trip.emplace_back(t.row, t.col, t.value);
    P_.resize(n_, n_);
    P_.setFromTriplets(trip.begin(), trip.end());

    // Equalities: explicit rows plus fixed variables.
    std::vector<Eigen::Triplet<double>> a_trip;
    std::vector<double> b = pr_.b_;
    for (const auto& t : pr_.a_) a_trip.emplace_back(t.row, t.col, t.value);
    int row = static_cast<int>(b.size());
    for (int j = 0; j < n_; ++j) {
        if (pr_.lo_[static_cast<std::size_t>(j)] == pr_.hi_[static_cast<std::size_t>(j)]) {
            a_trip.emplace_back(row++, j, 1.0);
            b.push_back(pr_.lo_[static_cast<std::size_t>(j)]);
        }
    }
    p_ = row;
    A_.resize(p_, n_);
    A_.setFromTriplets(a_trip.begin(), a_trip.end());
    b_ = Eigen::Map<const Vec>(b.data(), p_);

    // Inequalities: general rows first, then finite bounds.
    std::vector<Eigen::Triplet<double>> g_trip;
    std::vector<double> h = pr_.h_;
    for (const auto& t : pr_.g_) g_trip.emplace_back(t.row, t.col, t.value);
    m_general_ = static_cast<int>(h.size());
    row = m_general_;
    for (int j = 0; j < n_; ++j) {
        const double lo = pr_.lo_[static_cast<std::size_t>(j)];
        const double hi = pr_.hi_[static_cast<std::size_t>(j)];
        if (lo == hi) continue;
        if (std::isfinite(lo)) {
            g_trip.emplace_back(row++, j, -1.0);
            h.push_back(-lo);
        }
        if (std::isfinite(hi)) {
            g_trip.emplace_back(row++, j, 1.0);
            h.push_back(hi);
        }
    }
    m_ = row;
    G_.resize(m_, n_);
    G_.setFromTriplets(g_trip.begin(), g_trip.end());
    Gt_ = G_.transpose();
    h_ = Eigen::Map<const Vec>(h.data(), m_);
}

bool Solver::factor(const Vec& w) {
    // Raise the regularization when the pivots break down; refinement
    // against the exact matrix recovers the accuracy.
    for (double reg = st_.regularization; reg <= 1e-4; reg *= 100.0) {
        if (factor(w, reg)) return true;
    }
    return false;
}

bool Solver::factor(const Vec& w, double reg) {
    SpMat H = P_;
    if (m_ > 0) H += SpMat(Gt_ * w.asDiagonal() * G_);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(H.nonZeros() + 2 * A_.nonZeros() + n_ + p_));
    for (int c = 0; c < H.outerSize(); ++c) {
        for (SpMat::InnerIterator it(H, c); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
    }
    for (int c = 0; c < A_.outerSize(); ++c) {
        for (SpMat::InnerIterator it(A_, c); it; ++it) {
            trip.emplace_back(n_ + it.row(), it.col(), it.value());
            trip.emplace_back(it.col(), n_ + it.row(), it.value());
        }
    }
    std::vector<Eigen::Triplet<double>> exact = trip;
    for (int i = 0; i < n_; ++i) {
        trip.emplace_back(i, i, reg);
        exact.emplace_back(i, i, 0.0);
    }
    for (int i = 0; i < p_; ++i) {
        trip.emplace_back(n_ + i, n_ + i, -reg);
        exact.emplace_back(n_ + i, n_ + i, 0.0);
    }
    SpMat K(n_ + p_, n_ + p_);
    K.setFromTriplets(trip.begin(), trip.end());
    K0_.resize(n_ + p_, n_ + p_);
    K0_.setFromTriplets(exact.begin(), exact.end());
    if (!analyzed_) {
        ldlt_.analyzePattern(K);
        analyzed_ = true;
    }
    ldlt_.factorize(K);
    return ldlt_.info() == Eigen::Success;
}

Vec Solver::solve_kkt(const Vec& rhs) const {
    Vec sol = ldlt_.solve(rhs);
    for (int it = 0; it < 3; ++it) {
        const Vec res = rhs - K0_ * sol;
        if (res.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) break;
        sol += ldlt_.solve(res);
    }
    return sol;
}

Solution Solver::run() {
    Solution out;
    Vec x = Vec::Zero(n_);
    Vec y = Vec::Zero(p_);
    Vec z = Vec::Ones(m_);
    Vec s = Vec::Ones(m_);

    auto pack = [this](const Vec& top, const Vec& bottom) {
        Vec r(n_ + p_);
        r.head(n_) = top;
        r.tail(p_) = bottom;
        return r;
    };

    // Initial point: least-squares fit of the inequalities under the equalities.
    if (!factor(Vec::Ones(m_))) return out;
    {
        const Vec sol = solve_kkt(pack(-q_ + (m_ > 0 ? Vec(Gt_ * h_) : Vec::Zero(n_)), b_));
        x = sol.head(n_);
        y = sol.tail(p_);
        if (m_ > 0) {
            // The solve also yields the multipliers Gx − h of the unit-weight
            // fit; shift slacks and multipliers into the positive orthant.
            s = h_ - G_ * x;
            z = -s;
            const double ap = -s.minCoeff();
            if (ap >= 0.0) s.array() += 1.0 + ap;
            const double ad = -z.minCoeff();
            if (ad >= 0.0) z.array() += 1.0 + ad;
        }
    }

    const double scale_q = 1.0 + q_.lpNorm<Eigen::Infinity>();
    const double scale_b = 1.0 + (p_ > 0 ? b_.lpNorm<Eigen::Infinity>() : 0.0);
    const double scale_h = 1.0 + (m_ > 0 ? h_.lpNorm<Eigen::Infinity>() : 0.0);

    std::array<Vec, 4> kept;
    struct {
        int iter = 0;
        double dual = 0.0, primal = 0.0, gap = 0.0;
    } kept_stats;
    bool have_kept = false;

    for (int iter = 0; iter <= st_.max_iterations; ++iter) {
        const Vec rd = P_ * x + q_ + A_.transpose() * y + Gt_ * z;
        const Vec rp = A_ * x - b_;
        const Vec rg = G_ * x + s - h_;
        const double mu = m_ > 0 ? s.dot(z) / m_ : 0.0;

        out.iterations = iter;
        out.dual_residual = rd.lpNorm<Eigen::Infinity>();
        out.primal_residual = std::max(p_ > 0 ? rp.lpNorm<Eigen::Infinity>() : 0.0,
                                       m_ > 0 ? rg.lpNorm<Eigen::Infinity>() : 0.0);
        out.gap = mu;
        const bool feasible = out.dual_residual <= st_.feasibility_tol * scale_q &&
                              (p_ == 0 || rp.lpNorm<Eigen::Infinity>() <= st_.feasibility_tol * scale_b) &&
                              (m_ == 0 || rg.lpNorm<Eigen::Infinity>() <= st_.feasibility_tol * scale_h);
        // Complementarity is pushed to an absolute level so inactive bounds
        // end up at zero.
        if (feasible && mu <= st_.gap_tol * scale_q) {
            kept = {x, y, z, s};
            kept_stats = {iter, out.dual_residual, out.primal_residual, mu};
            have_kept = true;
        }
        if (feasible && mu <= st_.gap_tol) {
            out.status = Status::Solved;
            break;
        }
        if (iter == st_.max_iterations) {
            out.status = Status::MaxIterations;
            break;
        }

        const Vec w = m_ > 0 ? Vec(z.cwiseQuotient(s)) : Vec();
        if (!factor(w)) {
            out.status = Status::NumericalError;
            break;
        }
        auto direction = [&](const Vec& rc, Vec& dx, Vec& dy, Vec& dz, Vec& ds) {
            Vec top = -rd;
            if (m_ > 0) top -= Gt_ * Vec((z.cwiseProduct(rg) - rc).cwiseQuotient(s));
            const Vec sol = solve_kkt(pack(top, -rp));
            dx = sol.head(n_);
            dy = sol.tail(p_);
            if (m_ > 0) {
                dz = w.cwiseProduct(G_ * dx) + (z.cwiseProduct(rg) - rc).cwiseQuotient(s);
                ds = -rg - G_ * dx;
            }
        };
        auto max_step = [this](const Vec& v, const Vec& dv) {
            double a = 1.0;
            for (int i = 0; i < m_; ++i) {
                if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
            }
            return a;
        };

        Vec dx, dy, dz, ds;
        if (m_ == 0) {
            direction(Vec(), dx, dy, dz, ds);
            x += dx;
            y += dy;
            continue;
        }
        // Predictor.
        direction(s.cwiseProduct(z), dx, dy, dz, ds);
        const double a_aff = std::min(max_step(s, ds), max_step(z, dz));
        const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / m_;
        const double sigma = std::pow(mu_aff / mu, 3);
        // Corrector.
        const Vec rc = s.cwiseProduct(z) + ds.cwiseProduct(dz) - Vec::Constant(m_, sigma * mu);
        direction(rc, dx, dy, dz, ds);
        const double alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));
        if (!(dx.allFinite() && dy.allFinite() && dz.allFinite() && ds.allFinite() && std::isfinite(alpha))) {
            out.status = Status::NumericalError;
            break;
        }
        x += alpha * dx;
        y += alpha * dy;
        z += alpha * dz;
        s += alpha * ds;
    }

    if (out.status != Status::Solved && have_kept) {
        // The KKT system became too ill-conditioned on the way down; fall
        // back to the last iterate that met the scaled tolerance.
        x = kept[0];
        y = kept[1];
        z = kept[2];
        out.status = Status::Solved;
        out.iterations = kept_stats.iter;
        out.dual_residual = kept_stats.dual;
        out.primal_residual = kept_stats.primal;
        out.gap = kept_stats.gap;
    }
    out.x = x;
    out.eq_duals = y.head(static_cast<Eigen::Index>(pr_.b_.size()));
    out.ineq_duals = z.head(m_general_);
    out.objective = pr_.objective(x);
    return out;
}

Solution solve(const Problem& problem, const Settings& settings) {
    if (problem.num_variables() == 0) throw std::invalid_argument("QP has no variables");
    return Solver(problem, settings).run();
}

}  // namespace dcs::qp
