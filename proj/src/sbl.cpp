// SPDX-License-Identifier: Apache-2.0
//
// plasim - propagation modelling and analysis for physically large arrays
// Copyright (C) 2026 The plasim authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "pla/sbl.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <exception>
#include <numeric>

#include <unsupported/Eigen/FFT>

#include "pla/errors.hpp"
#include "pla/parallel.hpp"

// Per-subarray estimation under the model
//   y = sum_k a_k phi(theta_k) + w,  a_k ~ CN(0, gamma_k),  w ~ CN(0, noise_var I)
// with unit-norm wideband plane-wave atoms phi. Components are inserted greedily from a
// coarse (delay, az, el) scan of the posterior residual, refined by golden-section
// coordinate ascent, and their hyperparameters re-estimated with exact per-component
// evidence maximisation plus an EM noise update. Both updates never decrease the evidence.

namespace pla
{

namespace
{

using CMat = Eigen::MatrixXcd;

// Delay plus direction cosines along the local horizontal and vertical axes
struct Params
{
    double delay = 0.0;
    double uh = 0.0;
    double uv = 0.0;
};

Vec3 direction_from_cosines(double uh, double uv)
{
    double r2 = uh * uh + uv * uv;
    if (r2 > 1.0)
    {
        const double r = std::sqrt(r2);
        uh /= r, uv /= r;
        r2 = 1.0;
    }
    return {std::sqrt(std::max(0.0, 1.0 - r2)), uh, uv};
}

Angles angles_of(const Params &p)
{
    return local_angles(direction_from_cosines(p.uh, p.uv));
}

class Problem
{
public:
    Problem(const CMatrix &Y, const Subarray &sub, const ArrayGeometry &arr, const FrequencyGrid &freqs)
        : M_(sub.element_indices.size()), N_(freqs.count), L_(M_ * N_), f0_(freqs.start), df_(freqs.step)
    {
        offsets_.reserve(M_);
        for (auto idx : sub.element_indices)
            offsets_.push_back(arr.frame.to_local(arr.element_positions[idx] - sub.centroid));
        y_.resize(static_cast<Eigen::Index>(L_));
        for (std::size_t m = 0; m < M_; ++m)
            for (std::size_t n = 0; n < N_; ++n)
                y_[static_cast<Eigen::Index>(m * N_ + n)] = Y(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
        energy_ = y_.squaredNorm();
    }

    std::size_t elements() const { return M_; }
    std::size_t freqs() const { return N_; }
    std::size_t length() const { return L_; }
    double period() const { return 1.0 / df_; }
    const CVector &y() const { return y_; }
    double energy() const { return energy_; }

    CVector atom(const Params &p) const
    {
        const Vec3 u = direction_from_cosines(p.uh, p.uv);
        const double scale = 1.0 / std::sqrt(static_cast<double>(L_));
        CVector a(static_cast<Eigen::Index>(L_));
        for (std::size_t m = 0; m < M_; ++m)
        {
            const double t = p.delay - dot(offsets_[m], u) / speed_of_light;
            for (std::size_t n = 0; n < N_; ++n)
                a[static_cast<Eigen::Index>(m * N_ + n)] = std::polar(scale, -two_pi * (f0_ + static_cast<double>(n) * df_) * t);
        }
        return a;
    }

    // atom(p)^H r
    cdouble correlate(const Params &p, const CVector &r) const
    {
        const Vec3 u = direction_from_cosines(p.uh, p.uv);
        cdouble acc{};
        for (std::size_t m = 0; m < M_; ++m)
        {
            const double t = p.delay - dot(offsets_[m], u) / speed_of_light;
            const cdouble rot = std::polar(1.0, two_pi * df_ * t);
            cdouble w = std::polar(1.0, two_pi * f0_ * t);
            const cdouble *row = r.data() + m * N_;
            cdouble s{};
            for (std::size_t n = 0; n < N_; ++n)
            {
                s += row[n] * w;
                w *= rot;
            }
            acc += s;
        }
        return acc / std::sqrt(static_cast<double>(L_));
    }

    // atom(p)^H r and its derivative along one parameter (0 delay, 1 uh, 2 uv)
    std::pair<cdouble, cdouble> correlate_with_derivative(const Params &p, const CVector &r, int coord) const
    {
        const Vec3 u = direction_from_cosines(p.uh, p.uv);
        const double ux = std::max(u.x, 1e-6);
        const double half_n = 0.5 * static_cast<double>(N_ - 1);
        const double fc = f0_ + half_n * df_;
        cdouble c{}, dc{};
        for (std::size_t m = 0; m < M_; ++m)
        {
            const Vec3 &o = offsets_[m];
            const double t = p.delay - dot(o, u) / speed_of_light;
            double dt = 1.0;
            if (coord == 1)
                dt = -(o.y - o.x * u.y / ux) / speed_of_light;
            else if (coord == 2)
                dt = -(o.z - o.x * u.z / ux) / speed_of_light;
            const cdouble rot = std::polar(1.0, two_pi * df_ * t);
            cdouble w = std::polar(1.0, two_pi * f0_ * t);
            const cdouble *row = r.data() + m * N_;
            cdouble s0{}, s1{};
            for (std::size_t n = 0; n < N_; ++n)
            {
                const cdouble v = row[n] * w;
                s0 += v;
                s1 += (static_cast<double>(n) - half_n) * df_ * v;
                w *= rot;
            }
            c += s0;
            dc += cdouble(0.0, two_pi * dt) * (s1 + fc * s0);
        }
        const double scale = 1.0 / std::sqrt(static_cast<double>(L_));
        return {c * scale, dc * scale};
    }

    // d |atom(p)^H r|^2 / d parameter
    double slope(const Params &p, const CVector &r, int coord) const
    {
        const auto [c, dc] = correlate_with_derivative(p, r, coord);
        return 2.0 * std::real(std::conj(c) * dc);
    }

    // Strongest atom of a (delay, az, el) grid against r
    Params coarse_scan(const CVector &r, double angle_step, int oversampling) const
    {
        const std::size_t nfft = static_cast<std::size_t>(oversampling) * N_;
        const double delay_step = 1.0 / (static_cast<double>(nfft) * df_);
        std::vector<double> angles;
        const int half = static_cast<int>(std::floor(std::numbers::pi / 2.0 / angle_step + 1e-9));
        for (int k = -half; k <= half; ++k)
            angles.push_back(k * angle_step);

        std::vector<cdouble> spectrum(nfft), delays(nfft);
        std::vector<double> shift(M_);
        Params best;
        double best_power = -1.0;
        for (double el : angles)
        {
            for (double az : angles)
            {
                const Vec3 u = local_direction(az, el);
                for (std::size_t m = 0; m < M_; ++m)
                    shift[m] = dot(offsets_[m], u) / speed_of_light;
                std::fill(spectrum.begin(), spectrum.end(), cdouble{});
                for (std::size_t m = 0; m < M_; ++m)
                {
                    const cdouble rot = std::polar(1.0, -two_pi * df_ * shift[m]);
                    cdouble w = std::polar(1.0, -two_pi * f0_ * shift[m]);
                    const cdouble *row = r.data() + m * N_;
                    for (std::size_t n = 0; n < N_; ++n)
                    {
                        spectrum[n] += row[n] * w;
                        w *= rot;
                    }
                }
                fft_.inv(delays, spectrum);
                for (std::size_t i = 0; i < nfft; ++i)
                {
                    const double p = std::norm(delays[i]);
                    if (p > best_power)
                    {
                        best_power = p;
                        best = {static_cast<double>(i) * delay_step, u.y, u.z};
                    }
                }
            }
        }
        return best;
    }

    double wrap_delay(double tau) const
    {
        const double T = period();
        tau = std::fmod(tau, T);
        return tau < 0.0 ? tau + T : tau;
    }

private:
    std::size_t M_, N_, L_;
    double f0_, df_;
    std::vector<Vec3> offsets_;
    CVector y_;
    double energy_ = 0.0;
    mutable Eigen::FFT<double> fft_;
};

// Maximises f on [lo, hi]; keeps x0 unless a strictly better point is found
template <typename F>
double golden_maximize(F &&f, double lo, double hi, double x0, int iters)
{
    constexpr double ratio = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - ratio * (b - a), d = a + ratio * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters; ++i)
    {
        if (fc >= fd)
        {
            b = d, d = c, fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        }
        else
        {
            a = c, c = d, fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    const double xm = fc >= fd ? c : d;
    const double fm = std::max(fc, fd);
    return fm > f(x0) ? xm : x0;
}

double &coordinate(Params &p, int coord)
{
    return coord == 0 ? p.delay : (coord == 1 ? p.uh : p.uv);
}

// Newton iterations on the analytic slope, curvature by central differences.
// Steps larger than the search half-width are rejected.
void newton_finish(const Problem &prob, Params &p, const CVector &r, int coord, double half)
{
    const double h = 1e-4 * half;
    for (int it = 0; it < 4; ++it)
    {
        Params lo = p, hi = p;
        coordinate(lo, coord) -= h;
        coordinate(hi, coord) += h;
        const double g = prob.slope(p, r, coord);
        const double curv = (prob.slope(hi, r, coord) - prob.slope(lo, r, coord)) / (2.0 * h);
        if (!(curv < 0.0))
            return;
        const double step = -g / curv;
        if (!(std::abs(step) < half))
            return;
        coordinate(p, coord) += step;
        if (std::abs(step) < 1e-15 * half)
            return;
    }
}

void refine(const Problem &prob, Params &p, const CVector &r, int rounds, double half_delay, double half_u, int iters)
{
    for (int round = 0; round < rounds; ++round)
    {
        p.delay = golden_maximize([&](double t) { return std::norm(prob.correlate({t, p.uh, p.uv}, r)); },
                                  p.delay - half_delay, p.delay + half_delay, p.delay, iters);
        newton_finish(prob, p, r, 0, half_delay);
        p.uh = golden_maximize([&](double x) { return std::norm(prob.correlate({p.delay, x, p.uv}, r)); },
                               std::max(-1.0, p.uh - half_u), std::min(1.0, p.uh + half_u), p.uh, iters);
        newton_finish(prob, p, r, 1, half_u);
        p.uv = golden_maximize([&](double x) { return std::norm(prob.correlate({p.delay, p.uh, x}, r)); },
                               std::max(-1.0, p.uv - half_u), std::min(1.0, p.uv + half_u), p.uv, iters);
        newton_finish(prob, p, r, 2, half_u);
    }
    // Keep the direction on the unit disc
    const Vec3 u = direction_from_cosines(p.uh, p.uv);
    p.uh = u.y, p.uv = u.z;
}

struct Posterior
{
    CMat sigma; // K x K
    CVector mu; // K
    double logdet_precision = 0.0;
};

class Model
{
public:
    explicit Model(const Problem &prob) : prob_(&prob) {}

    std::size_t size() const { return params.size(); }

    void add(const Params &p, double g)
    {
        const CVector a = prob_->atom(p);
        const auto K = static_cast<Eigen::Index>(size());
        CMat phi(phi_.rows() == 0 ? a.size() : phi_.rows(), K + 1);
        if (K > 0)
            phi.leftCols(K) = phi_;
        phi.col(K) = a;
        phi_ = std::move(phi);

        CMat G(K + 1, K + 1);
        if (K > 0)
        {
            G.topLeftCorner(K, K) = G_;
            const CVector b = phi_.leftCols(K).adjoint() * a;
            G.block(0, K, K, 1) = b;
            G.block(K, 0, 1, K) = b.adjoint();
        }
        G(K, K) = a.squaredNorm();
        G_ = std::move(G);

        CVector py(K + 1);
        if (K > 0)
            py.head(K) = phy_;
        py[K] = a.dot(prob_->y());
        phy_ = std::move(py);

        params.push_back(p);
        gamma.push_back(g);
        ids.push_back(next_id++);
    }

    // Recomputes atoms, Gram matrix and correlations from params
    void rebuild()
    {
        const auto K = static_cast<Eigen::Index>(size());
        phi_.resize(static_cast<Eigen::Index>(prob_->length()), K);
        for (Eigen::Index k = 0; k < K; ++k)
            phi_.col(k) = prob_->atom(params[static_cast<std::size_t>(k)]);
        G_ = phi_.adjoint() * phi_;
        phy_ = phi_.adjoint() * prob_->y();
    }

    void remove(std::size_t k)
    {
        params.erase(params.begin() + static_cast<std::ptrdiff_t>(k));
        gamma.erase(gamma.begin() + static_cast<std::ptrdiff_t>(k));
        ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(k));
        rebuild();
    }

    // Sigma = noise_var B^-1, mu = B^-1 Phi^H y with B = G + noise_var Gamma^-1
    Posterior posterior() const
    {
        Posterior post;
        const auto K = static_cast<Eigen::Index>(size());
        if (K == 0)
            return post;
        CMat B = G_;
        for (Eigen::Index k = 0; k < K; ++k)
            B(k, k) += noise_var / gamma[static_cast<std::size_t>(k)];
        const Eigen::LLT<CMat> llt(B);
        post.mu = llt.solve(phy_);
        post.sigma = noise_var * llt.solve(CMat::Identity(K, K));
        const auto &Lm = llt.matrixL();
        for (Eigen::Index k = 0; k < K; ++k)
            post.logdet_precision += 2.0 * std::log(std::real(Lm(k, k)));
        post.logdet_precision -= static_cast<double>(K) * std::log(noise_var);
        return post;
    }

    // log p(y) = -L log pi - log|C| - y^H C^-1 y, with
    // y^H C^-1 y = (|y - Phi mu|^2 + noise_var mu^H Gamma^-1 mu) / noise_var
    double log_evidence(const Posterior &post) const
    {
        const double L = static_cast<double>(prob_->length());
        double logdet = L * std::log(noise_var) + post.logdet_precision;
        double penalty = 0.0;
        for (std::size_t k = 0; k < size(); ++k)
        {
            logdet += std::log(gamma[k]);
            penalty += std::norm(post.mu[static_cast<Eigen::Index>(k)]) / gamma[k];
        }
        const double quad = residual_energy(post) / noise_var + penalty;
        return -L * std::log(std::numbers::pi) - logdet - quad;
    }

    double log_evidence() const { return log_evidence(posterior()); }

    double residual_energy(const Posterior &post) const { return residual(post).squaredNorm(); }

    CVector residual(const Posterior &post) const
    {
        if (size() == 0)
            return prob_->y();
        return prob_->y() - phi_ * post.mu;
    }

    CVector column(std::size_t k) const { return phi_.col(static_cast<Eigen::Index>(k)); }
    const CMat &atoms() const { return phi_; }

    // Candidate statistics (s, q) of a new atom against the current model
    std::pair<double, cdouble> candidate_stats(const CVector &a, const CVector &r, const Posterior &post) const
    {
        double s = a.squaredNorm();
        if (size() > 0)
        {
            const CVector b = phi_.adjoint() * a;
            s -= std::real(b.dot(post.sigma * b)) / noise_var;
        }
        const cdouble q = a.dot(r) / noise_var;
        return {s / noise_var, q};
    }

    // Sparsity and quality factors of component k against the model without it
    std::pair<double, cdouble> leave_one_out(std::size_t k) const
    {
        const auto K = static_cast<Eigen::Index>(size());
        const auto kk = static_cast<Eigen::Index>(k);
        double S = std::real(G_(kk, kk));
        cdouble Q = phy_[kk];
        if (K > 1)
        {
            std::vector<Eigen::Index> rest;
            for (Eigen::Index j = 0; j < K; ++j)
                if (j != kk)
                    rest.push_back(j);
            const auto R = static_cast<Eigen::Index>(rest.size());
            CMat B(R, R);
            CVector g(R), p(R);
            for (Eigen::Index i = 0; i < R; ++i)
            {
                for (Eigen::Index j = 0; j < R; ++j)
                    B(i, j) = G_(rest[static_cast<std::size_t>(i)], rest[static_cast<std::size_t>(j)]);
                B(i, i) += noise_var / gamma[static_cast<std::size_t>(rest[static_cast<std::size_t>(i)])];
                g[i] = G_(rest[static_cast<std::size_t>(i)], kk);
                p[i] = phy_[rest[static_cast<std::size_t>(i)]];
            }
            const Eigen::LLT<CMat> llt(B);
            const CVector x = llt.solve(g);
            S -= std::real(g.dot(x));
            Q -= x.dot(p);
        }
        return {S / noise_var, Q / noise_var};
    }

    // Exact per-component evidence maximisation followed by an EM noise update, until
    // the relative parameter change drops below tol. Components whose optimal variance
    // is zero are removed.
    void reestimate(double tol, int max_sweeps, double noise_floor)
    {
        for (int sweep = 0; sweep < max_sweeps; ++sweep)
        {
            double change = 0.0;
            for (std::size_t k = 0; k < size();)
            {
                const auto [S, Q] = leave_one_out(k);
                if (S > 0.0 && std::norm(Q) > S)
                {
                    const double updated = (std::norm(Q) - S) / (S * S);
                    change = std::max(change, std::abs(updated - gamma[k]) / gamma[k]);
                    gamma[k] = updated;
                    ++k;
                }
                else
                {
                    remove(k);
                    change = 1.0;
                }
            }
            const Posterior post = posterior();
            double trace = 0.0;
            if (size() > 0)
                trace = std::real((post.sigma * G_).trace());
            const double updated =
                std::max(noise_floor, (residual_energy(post) + trace) / static_cast<double>(prob_->length()));
            change = std::max(change, std::abs(updated - noise_var) / noise_var);
            noise_var = updated;
            if (change < tol)
                break;
        }
    }

    std::vector<Params> params;
    std::vector<double> gamma;
    std::vector<int> ids;
    int next_id = 0;
    double noise_var = 1.0;

private:
    const Problem *prob_;
    CMat phi_;
    CMat G_;
    CVector phy_;
};

double snr_linear(const Model &model, const Posterior &post, std::size_t k)
{
    return std::norm(post.mu[static_cast<Eigen::Index>(k)]) / model.noise_var;
}

struct Search
{
    double half_delay;
    double half_u;
};

// One SAGE-style refinement of every component against the data minus the others.
// Reverted if the evidence drops. Returns the largest parameter shift relative to the
// search half-widths.
double polish(const Problem &prob, Model &model, const SBLConfig &cfg, const Search &search, int rounds,
              double noise_floor)
{
    if (model.size() == 0)
        return 0.0;
    double shift = 0.0;
    const Model backup = model;
    const double before = model.log_evidence();
    Posterior post = model.posterior();
    CVector r = model.residual(post);
    for (std::size_t k = 0; k < model.size(); ++k)
    {
        const cdouble mu = post.mu[static_cast<Eigen::Index>(k)];
        const CVector rk = r + mu * model.column(k);
        Params p = model.params[k];
        refine(prob, p, rk, rounds, search.half_delay, search.half_u, cfg.golden_iters);
        p.delay = prob.wrap_delay(p.delay);
        const Params &q = model.params[k];
        shift = std::max({shift, std::abs(prob.wrap_delay(p.delay - q.delay)) / search.half_delay,
                          std::abs(p.uh - q.uh) / search.half_u, std::abs(p.uv - q.uv) / search.half_u});
        model.params[k] = p;
        r = rk - mu * prob.atom(p);
    }
    model.rebuild();
    model.reestimate(cfg.convergence_tol, cfg.max_inner_iters, noise_floor);
    if (model.log_evidence() < before - 1e-12 * std::abs(before))
    {
        model = backup;
        return 0.0;
    }
    return shift;
}

} // namespace

void validate(const SBLConfig &cfg)
{
    if (cfg.max_components < 1)
        throw ConfigError("SBL max_components must be at least 1");
    if (!(cfg.band_hz > 0.0))
        throw ConfigError("SBL band must be positive");
    if (cfg.max_iters < 0 || cfg.max_inner_iters < 1 || cfg.refine_rounds < 0 || cfg.golden_iters < 1 ||
        cfg.final_polish_sweeps < 0 || cfg.max_polish_sweeps < 1)
        throw ConfigError("SBL iteration counts out of range");
    if (cfg.delay_oversampling < 1)
        throw ConfigError("SBL delay oversampling must be at least 1");
    if (cfg.angle_step < 0.0 || !(cfg.convergence_tol > 0.0) || !(cfg.noise_floor_rel > 0.0))
        throw ConfigError("SBL tolerances must be positive");
}

SubarrayResult sbl_estimate(const CMatrix &Y, const Subarray &sub, const ArrayGeometry &arr,
                            const FrequencyGrid &freqs, const SBLConfig &cfg)
{
    validate(cfg);
    if (static_cast<std::size_t>(Y.rows()) != sub.element_indices.size() ||
        static_cast<std::size_t>(Y.cols()) != freqs.count)
        throw InvariantError("SBL input is " + std::to_string(Y.rows()) + " x " + std::to_string(Y.cols()) +
                             ", expected " + std::to_string(sub.element_indices.size()) + " x " +
                             std::to_string(freqs.count));
    if (!Y.allFinite())
        throw InvariantError("SBL input contains non-finite values");
    if (freqs.count < 2 || !(freqs.step > 0.0))
        throw InvariantError("SBL needs a uniform grid with at least 2 frequencies");

    const Problem prob(Y, sub, arr, freqs);
    SubarrayResult result;
    result.subarray_index = sub.index;
    result.total_energy = prob.energy();
    if (prob.energy() == 0.0)
    {
        result.noise_var = std::numeric_limits<double>::min();
        return result;
    }

    const double L = static_cast<double>(prob.length());
    const double noise_floor = cfg.noise_floor_rel * prob.energy() / L;
    const double threshold = std::pow(10.0, cfg.prune_threshold_db / 10.0);
    const double side = std::max(1.0, std::round(std::sqrt(static_cast<double>(prob.elements()))));
    const double angle_step = cfg.angle_step > 0.0 ? cfg.angle_step : 2.0 / side;
    const double delay_step = 1.0 / (cfg.delay_oversampling * static_cast<double>(freqs.count) * freqs.step);
    const Search insert_search{delay_step, angle_step};
    const Search polish_search{0.5 * delay_step, 0.5 * angle_step};

    Model model(prob);
    model.noise_var = std::max(noise_floor, prob.energy() / L);
    result.evidence_trace.push_back(model.log_evidence());

    for (int iter = 0; iter < cfg.max_iters; ++iter)
    {
        if (model.size() >= static_cast<std::size_t>(cfg.max_components))
            break;

        const Posterior post = model.posterior();
        const CVector r = model.residual(post);
        Params cand = prob.coarse_scan(r, angle_step, cfg.delay_oversampling);
        refine(prob, cand, r, cfg.refine_rounds, insert_search.half_delay, insert_search.half_u, cfg.golden_iters);
        cand.delay = prob.wrap_delay(cand.delay);

        const CVector a = prob.atom(cand);
        const auto [s, q] = model.candidate_stats(a, r, post);
        if (!(s > 0.0) || std::norm(q) <= s * (1.0 + 1e-12))
            break;

        const Model backup = model;
        model.add(cand, (std::norm(q) - s) / (s * s));
        const int id = model.ids.back();
        model.reestimate(cfg.convergence_tol, cfg.max_inner_iters, noise_floor);

        const auto it = std::find(model.ids.begin(), model.ids.end(), id);
        const bool kept = it != model.ids.end() &&
                          snr_linear(model, model.posterior(), static_cast<std::size_t>(it - model.ids.begin())) >= threshold;
        if (!kept)
        {
            model = backup;
            break;
        }
        if (cfg.polish_each_iteration)
            for (int sweep = 0; sweep < cfg.max_polish_sweeps; ++sweep)
                if (polish(prob, model, cfg, polish_search, 1, noise_floor) < 1e-6)
                    break;

        const double ev = model.log_evidence();
        assert(ev >= result.evidence_trace.back() - 1e-9 * std::abs(result.evidence_trace.back()));
        result.evidence_trace.push_back(ev);
    }

    for (int sweep = 0; sweep < cfg.final_polish_sweeps; ++sweep)
        polish(prob, model, cfg, polish_search, cfg.refine_rounds, noise_floor);
    if (cfg.final_polish_sweeps > 0 && model.size() > 0)
        result.evidence_trace.push_back(model.log_evidence());

    // Final pruning on component SNR
    for (int pass = 0; pass < 4 && model.size() > 0; ++pass)
    {
        const Posterior post = model.posterior();
        std::size_t weakest = model.size();
        double weakest_snr = threshold;
        for (std::size_t k = 0; k < model.size(); ++k)
        {
            const double snr = snr_linear(model, post, k);
            if (snr < weakest_snr)
                weakest_snr = snr, weakest = k;
        }
        if (weakest == model.size())
            break;
        model.remove(weakest);
        model.reestimate(cfg.convergence_tol, cfg.max_inner_iters, noise_floor);
    }

    const Posterior post = model.posterior();
    for (std::size_t k = 0; k < model.size(); ++k)
    {
        const Params &p = model.params[k];
        const Angles ang = angles_of(p);
        MPCEstimate e;
        e.delay = p.delay;
        e.azimuth = ang.azimuth;
        e.elevation = ang.elevation;
        e.amplitude = post.mu[static_cast<Eigen::Index>(k)];
        e.gamma = model.gamma[k];
        e.component_snr_db = 10.0 * std::log10(std::norm(e.amplitude) / model.noise_var);
        result.estimates.push_back(e);
    }
    std::stable_sort(result.estimates.begin(), result.estimates.end(), [](const MPCEstimate &a, const MPCEstimate &b) {
        return std::norm(a.amplitude) > std::norm(b.amplitude);
    });
    result.noise_var = model.noise_var;

    const CMatrix Yhat = reconstruct(result, sub, arr, freqs);
    result.residual_energy_frac = std::clamp((Y - Yhat).squaredNorm() / prob.energy(), 0.0, 1.0);
    return result;
}

CMatrix reconstruct(const SubarrayResult &result, const Subarray &sub, const ArrayGeometry &arr,
                    const FrequencyGrid &freqs)
{
    const auto M = static_cast<Eigen::Index>(sub.element_indices.size());
    const auto N = static_cast<Eigen::Index>(freqs.count);
    CMatrix Yhat = CMatrix::Zero(M, N);
    const std::vector<double> f = freqs.values();
    for (const auto &e : result.estimates)
    {
        const CVector a = plane_wave_atom(sub, arr, f, e.delay, e.azimuth, e.elevation);
        for (Eigen::Index m = 0; m < M; ++m)
            for (Eigen::Index n = 0; n < N; ++n)
                Yhat(m, n) += e.amplitude * a[m * N + n];
    }
    return Yhat;
}

double component_energy_frac(const SubarrayResult &result, std::size_t k)
{
    if (k >= result.estimates.size())
        throw InvariantError("component index " + std::to_string(k) + " out of range");
    if (!(result.total_energy > 0.0))
        throw InvariantError("component energy fraction undefined for zero signal energy");
    return std::norm(result.estimates[k].amplitude) / result.total_energy;
}

CMatrix extract_subarray(const ChannelTensor &tensor, const Subarray &sub, std::size_t offset, std::size_t count)
{
    if (offset + count > static_cast<std::size_t>(tensor.H.cols()))
        throw InvariantError("frequency range exceeds the channel tensor");
    CMatrix Y(static_cast<Eigen::Index>(sub.element_indices.size()), static_cast<Eigen::Index>(count));
    for (std::size_t m = 0; m < sub.element_indices.size(); ++m)
    {
        const auto row = static_cast<Eigen::Index>(sub.element_indices[m]);
        if (row >= tensor.H.rows())
            throw InvariantError("subarray element index exceeds the channel tensor");
        Y.row(static_cast<Eigen::Index>(m)) =
            tensor.H.row(row).segment(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(count));
    }
    return Y;
}

EstimationRun estimate_subarrays(const ChannelTensor &tensor, const ArrayGeometry &arr,
                                 std::span<const Subarray> subarrays, const SBLConfig &cfg, int jobs)
{
    validate(cfg);
    validate(tensor);
    if (tensor.element_positions.size() != arr.size())
        throw InvariantError("channel tensor does not match the array geometry");
    if (!tensor.H.allFinite())
        throw InvariantError("channel tensor contains non-finite values");

    EstimationRun run;
    std::size_t offset = 0;
    const double center = tensor.metadata.f_c > 0.0 ? tensor.metadata.f_c : arr.f_c;
    run.band = select_band(tensor.freqs, center, cfg.band_hz, &offset);
    run.results.resize(subarrays.size());

    std::exception_ptr failure;
    const auto count = static_cast<std::ptrdiff_t>(subarrays.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_jobs(jobs))
    for (std::ptrdiff_t i = 0; i < count; ++i)
    {
        try
        {
            const CMatrix Y = extract_subarray(tensor, subarrays[i], offset, run.band.count);
            run.results[static_cast<std::size_t>(i)] = sbl_estimate(Y, subarrays[i], arr, run.band, cfg);
        }
        catch (...)
        {
#pragma omp critical(pla_sbl_failure)
            if (!failure)
                failure = std::current_exception();
        }
    }
    if (failure)
        std::rethrow_exception(failure);
    return run;
}

} // namespace pla
