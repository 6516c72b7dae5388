#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <vector>

#include "zrp/errors.hpp"

namespace zrp::oracle {

/// Capacity of the forward dynamics by a dense absorbing-chain computation,
/// sharing no code with the sparse pipeline: its own enumeration, rates and
/// measure, the embedded jump chain, and
///   Cap(A,B) = sum_{eta in A} mu(eta) lambda(eta) P_eta[H_B < H_A^+].
/// Intended for |E_N| up to a few thousand.
class DenseChain {
public:
    DenseChain(int L, int N, double alpha) : L_(L), N_(N), alpha_(alpha) {
        if (L < 2 || N < 1 || !(alpha > 0)) throw DomainError("dense oracle: invalid parameters");
        std::vector<int> c(static_cast<std::size_t>(L), 0);
        fill(c, 0, N);
        const auto n = static_cast<Eigen::Index>(states_.size());
        if (n > 20000) throw DomainError("dense oracle: state space too large");
        for (Eigen::Index i = 0; i < n; ++i) index_[states_[static_cast<std::size_t>(i)]] = i;

        rate_ = Eigen::MatrixXd::Zero(n, n);
        pi_ = Eigen::VectorXd(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& s = states_[static_cast<std::size_t>(i)];
            double w = 1.0;
            for (int v : s)
                if (v > 0) w /= std::pow(v, alpha_);
            pi_[i] = w;
            for (int x = 0; x < L_; ++x) {
                const int k = s[static_cast<std::size_t>(x)];
                if (k == 0) continue;
                auto t = s;
                --t[static_cast<std::size_t>(x)];
                ++t[static_cast<std::size_t>((x + 1) % L_)];
                const double g = k == 1 ? 1.0 : std::pow(double(k) / double(k - 1), alpha_);
                rate_(i, index_.at(t)) += g;
            }
        }
        pi_ /= pi_.sum();
    }

    Eigen::Index size() const { return static_cast<Eigen::Index>(states_.size()); }
    const std::vector<int>& state(Eigen::Index i) const { return states_[static_cast<std::size_t>(i)]; }
    Eigen::Index index(const std::vector<int>& s) const { return index_.at(s); }
    double mu(Eigen::Index i) const { return pi_[i]; }

    /// P_eta[H_A < H_B] for all eta (1 on A, 0 on B).
    Eigen::VectorXd hitting_probability(const std::vector<Eigen::Index>& A,
                                        const std::vector<Eigen::Index>& B) const {
        const Eigen::Index n = size();
        std::vector<int> role(static_cast<std::size_t>(n), 0);
        for (auto a : A) role[static_cast<std::size_t>(a)] = 1;
        for (auto b : B) {
            if (role[static_cast<std::size_t>(b)] == 1) throw DomainError("dense oracle: A and B overlap");
            role[static_cast<std::size_t>(b)] = 2;
        }
        std::vector<Eigen::Index> interior;
        for (Eigen::Index i = 0; i < n; ++i)
            if (role[static_cast<std::size_t>(i)] == 0) interior.push_back(i);
        Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
        for (auto a : A) h[a] = 1.0;
        const auto m = static_cast<Eigen::Index>(interior.size());
        if (m == 0) return h;
        // (I - P_II) h_I = P_IA 1 for the jump chain P = rate / lambda.
        Eigen::MatrixXd M = Eigen::MatrixXd::Identity(m, m);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            const Eigen::Index i = interior[static_cast<std::size_t>(r)];
            const double lambda = rate_.row(i).sum();
            for (Eigen::Index c = 0; c < m; ++c) M(r, c) -= rate_(i, interior[static_cast<std::size_t>(c)]) / lambda;
            for (auto a : A) rhs[r] += rate_(i, a) / lambda;
        }
        const Eigen::VectorXd x = M.partialPivLu().solve(rhs);
        for (Eigen::Index r = 0; r < m; ++r) h[interior[static_cast<std::size_t>(r)]] = x[r];
        return h;
    }

    double capacity(const std::vector<Eigen::Index>& A, const std::vector<Eigen::Index>& B) const {
        const Eigen::VectorXd h = hitting_probability(A, B);
        double cap = 0.0;
        for (auto a : A) {
            double escape = 0.0;  // lambda(eta) * P_eta[H_B < H_A^+]
            for (Eigen::Index j = 0; j < size(); ++j) escape += rate_(a, j) * (1.0 - h[j]);
            cap += pi_[a] * escape;
        }
        return cap;
    }

private:
    void fill(std::vector<int>& c, int pos, int rem) {
        if (pos == L_ - 1) {
            c[static_cast<std::size_t>(pos)] = rem;
            states_.push_back(c);
            return;
        }
        for (int v = 0; v <= rem; ++v) {
            c[static_cast<std::size_t>(pos)] = v;
            fill(c, pos + 1, rem - v);
        }
    }

    int L_, N_;
    double alpha_;
    std::vector<std::vector<int>> states_;
    std::map<std::vector<int>, Eigen::Index> index_;
    Eigen::MatrixXd rate_;
    Eigen::VectorXd pi_;
};

}  // namespace zrp::oracle
