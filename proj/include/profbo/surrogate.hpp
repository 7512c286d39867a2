#ifndef PROFBO_SURROGATE_HPP
#define PROFBO_SURROGATE_HPP

#include <memory>
#include <nlohmann/json.hpp>

#include "profbo/dgp.hpp"
#include "profbo/gp.hpp"
#include "profbo/vecchia.hpp"

namespace profbo {

using json = nlohmann::ordered_json;

namespace detail {

inline json hyp_to_json(const Hyperparameters& h) {
    json j;
    j["tau2"] = h.tau2;
    j["lengthscales"] = std::vector<double>(h.lengthscales.data(),
                                            h.lengthscales.data() + h.lengthscales.size());
    j["nugget"] = h.nugget;
    j["smoothness"] = h.nu == Smoothness::matern52 ? 2.5 : 1.5;
    return j;
}

} // namespace detail

/// Uniform surrogate interface for the acquisition loops. Joint samples and
/// pointwise moments are on the standardized response scale; callers map
/// back through the Dataset record.
class Surrogate {
public:
    virtual ~Surrogate() = default;
    virtual void fit(const Dataset& data, std::uint64_t seed) = 0;
    virtual void refit(const Dataset& data, std::uint64_t seed) = 0;
    virtual JointSamples sample_joint_std(const Eigen::MatrixXd& Xp, int S, int cond_size,
                                          Rng& rng) const = 0;
    virtual PointwiseMoments pointwise_std(const Eigen::MatrixXd& Xp) const = 0;
    virtual const Dataset& data() const = 0;
    virtual json checkpoint() const = 0;
    virtual std::string kind() const = 0;
};

class GpSurrogate final : public Surrogate {
public:
    explicit GpSurrogate(GpFitOptions options = {}, double nugget = 1e-6)
        : options_(options), nugget_(nugget) {}

    void fit(const Dataset& data, std::uint64_t) override {
        fit_ = fit_gp(data, nugget_, options_);
    }

    void refit(const Dataset& data, std::uint64_t seed) override { fit(data, seed); }

    JointSamples sample_joint_std(const Eigen::MatrixXd& Xp, int S, int cond_size,
                                  Rng& rng) const override {
        return sample_joint(fit_, Xp, S, cond_size, rng);
    }

    PointwiseMoments pointwise_std(const Eigen::MatrixXd& Xp) const override {
        return posterior_pointwise(fit_, Xp);
    }

    const Dataset& data() const override { return fit_.data; }
    const GPFit& fit_state() const { return fit_; }
    std::string kind() const override { return "gp"; }

    json checkpoint() const override {
        json j;
        j["kind"] = "gp";
        j["n"] = fit_.data.n();
        j["hyperparameters"] = detail::hyp_to_json(fit_.hyp);
        j["loglik"] = fit_.loglik;
        return j;
    }

private:
    GpFitOptions options_;
    double nugget_;
    GPFit fit_;
};

struct DgpSurrogateOptions {
    int iters_initial = 10000;
    int iters_refit = 2000;
    DgpOptions mcmc;
};

class DgpSurrogate final : public Surrogate {
public:
    explicit DgpSurrogate(DgpSurrogateOptions options = {}) : options_(options) {}

    void fit(const Dataset& data, std::uint64_t seed) override {
        state_ = fit_dgp(data, options_.iters_initial, seed, options_.mcmc);
        build_prediction_cache();
    }

    void refit(const Dataset& data, std::uint64_t seed) override {
        state_ = refit_dgp(state_, data, options_.iters_refit, seed, options_.mcmc);
        build_prediction_cache();
    }

    JointSamples sample_joint_std(const Eigen::MatrixXd& Xp, int S, int cond_size,
                                  Rng& rng) const override {
        const int T = state_.retained();
        if (T == 0) throw invalid_argument("DgpSurrogate: not fitted");
        if (S % T != 0)
            throw invalid_argument("DgpSurrogate: sample count must be a multiple of the "
                                   "retained draw count");
        return dgp_sample_joint(state_, Xp, S / T, cond_size, rng);
    }

    /// Moments aggregated over retained draws, with each draw's latent layer
    /// extended by its posterior mean warping.
    PointwiseMoments pointwise_std(const Eigen::MatrixXd& Xp) const override {
        const int T = state_.retained();
        const int np = static_cast<int>(Xp.rows());
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(np);
        Eigen::VectorXd second = Eigen::VectorXd::Zero(np);
        for (int t = 0; t < T; ++t) {
            const DgpDraw& drw = state_.draws[t];
            const PredCache& pc = cache_[t];
            Eigen::MatrixXd Wp = Xp;
            Wp.noalias() += cross_corr(Xp, state_.data.X, drw.inner) * pc.inner_mean_weights;

            const Eigen::MatrixXd Cpn = cross_corr(Wp, drw.W, drw.outer);
            Eigen::VectorXd mu_t = Cpn * pc.alpha_out;
            const Eigen::MatrixXd V =
                pc.chol_out.triangularView<Eigen::Lower>().solve(Cpn.transpose());
            for (int i = 0; i < np; ++i) {
                const double var =
                    drw.outer.tau2 * std::max(1.0 + drw.outer.nugget - V.col(i).squaredNorm(), 0.0);
                mean[i] += mu_t[i];
                second[i] += var + mu_t[i] * mu_t[i];
            }
        }
        mean /= T;
        second /= T;
        PointwiseMoments out;
        out.mean = mean;
        out.sd = (second.array() - mean.array().square()).max(0.0).sqrt();
        return out;
    }

    const Dataset& data() const override { return state_.data; }
    const DGPState& state() const { return state_; }
    std::string kind() const override { return "dgp"; }

    json checkpoint() const override {
        json j;
        j["kind"] = "dgp";
        j["n"] = state_.data.n();
        j["retained"] = state_.retained();
        j["inner_hyperparameters"] = detail::hyp_to_json(state_.inner_hyp);
        j["outer_hyperparameters"] = detail::hyp_to_json(state_.outer_hyp);
        json draws = json::array();
        for (const auto& drw : state_.draws) {
            json d;
            d["inner"] = detail::hyp_to_json(drw.inner);
            d["outer"] = detail::hyp_to_json(drw.outer);
            d["W"] = std::vector<double>(drw.W.data(), drw.W.data() + drw.W.size());
            draws.push_back(std::move(d));
        }
        j["draws"] = std::move(draws);
        return j;
    }

private:
    struct PredCache {
        Eigen::MatrixXd inner_mean_weights;  // (C_in + gI)^{-1} (W - mu_w)
        Eigen::MatrixXd chol_out;            // lower factor of C_out + gI
        Eigen::VectorXd alpha_out;           // (C_out + gI)^{-1} y_std
    };

    void build_prediction_cache() {
        cache_.clear();
        cache_.reserve(state_.retained());
        for (const auto& drw : state_.draws) {
            PredCache pc;
            Eigen::MatrixXd Cin = corr_matrix(state_.data.X, drw.inner);
            Cin.diagonal().array() += drw.inner.nugget;
            pc.inner_mean_weights =
                Eigen::LLT<Eigen::MatrixXd>(Cin).solve(drw.W - state_.mu_w);

            Eigen::MatrixXd Cout = corr_matrix(drw.W, drw.outer);
            Cout.diagonal().array() += drw.outer.nugget;
            Eigen::LLT<Eigen::MatrixXd> llt(Cout);
            if (llt.info() != Eigen::Success)
                throw numerical_error("DgpSurrogate: outer correlation not positive definite");
            pc.chol_out = llt.matrixL();
            pc.alpha_out = llt.solve(state_.y_std);
            cache_.push_back(std::move(pc));
        }
    }

    DgpSurrogateOptions options_;
    DGPState state_;
    std::vector<PredCache> cache_;
};

inline std::unique_ptr<Surrogate> make_surrogate(const std::string& kind,
                                                 const GpFitOptions& gp_opt = {},
                                                 const DgpSurrogateOptions& dgp_opt = {}) {
    if (kind == "gp") return std::make_unique<GpSurrogate>(gp_opt);
    if (kind == "dgp") return std::make_unique<DgpSurrogate>(dgp_opt);
    throw config_error("unknown surrogate kind: " + kind);
}

} // namespace profbo

#endif
