// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rcgdm/oracle.hpp"
#include "rcgdm/types.hpp"

namespace rcgdm {

/// Any map (x, y, t) -> R^D. Batched over rows of X; t may differ per row.
class ScoreFunction {
public:
    virtual ~ScoreFunction() = default;

    virtual Eigen::Index dim() const = 0;
    virtual Matrix evaluate(const Matrix& X, const Vector& y, const Vector& t) const = 0;

    /// Shared (y, t) for every row; the sampler's hot path.
    virtual Matrix evaluate_at(const Matrix& X, double y, double t) const;

    virtual std::string identity() const = 0;

    Vector operator()(const Eigen::Ref<const Vector>& x, double y, double t) const;
};

class AnalyticScore final : public ScoreFunction {
public:
    explicit AnalyticScore(GaussianDesignOracle oracle) : oracle_(std::move(oracle)) {}

    Eigen::Index dim() const override { return oracle_.world().D(); }
    Matrix evaluate(const Matrix& X, const Vector& y, const Vector& t) const override;
    Matrix evaluate_at(const Matrix& X, double y, double t) const override;
    std::string identity() const override { return "oracle"; }

    const GaussianDesignOracle& oracle() const { return oracle_; }

private:
    GaussianDesignOracle oracle_;
};

/// s == 0.
class ZeroScore final : public ScoreFunction {
public:
    explicit ZeroScore(Eigen::Index D) : D_(D) {}
    Eigen::Index dim() const override { return D_; }
    Matrix evaluate(const Matrix& X, const Vector&, const Vector&) const override {
        return Matrix::Zero(X.rows(), X.cols());
    }
    std::string identity() const override { return "zero"; }

private:
    Eigen::Index D_;
};

enum class HeadKind { covering, mlp };

const char* head_name(HeadKind kind);
HeadKind parse_head(const std::string& name);

/// Inner map psi(u, y, t) -> R^d of the encoder-decoder class. Parameters are
/// exposed as one flat vector so optimizers and finite-difference checks can
/// treat every head alike.
class ScoreHead {
public:
    virtual ~ScoreHead() = default;

    virtual HeadKind kind() const = 0;
    virtual std::unique_ptr<ScoreHead> clone() const = 0;
    virtual Eigen::Index latent_dim() const = 0;
    virtual Eigen::Index num_params() const = 0;
    virtual Vector parameters() const = 0;
    virtual void set_parameters(const Eigen::Ref<const Vector>& theta) = 0;

    /// U: n x d codes; y, t: per-row label and time. Returns n x d.
    virtual Matrix forward(const Matrix& U, const Vector& y, const Vector& t) const = 0;

    /// Backpropagates G_psi (n x d). Returns dL/dU and adds dL/dparams to grad.
    virtual Matrix backward(const Matrix& U, const Vector& y, const Vector& t, const Matrix& G_psi,
                            Eigen::Ref<Vector> grad) const = 0;
};

/// psi(u, y, t) = alpha B_t (alpha u + (h/nu^2) y beta), with
/// B_t = (alpha^2 I + (h/nu^2) beta beta^T + h P)^{-1}. P stands in for
/// Sigma^{-1} and is stored as its lower triangle. Contains the true head when
/// (P, beta) = (Sigma^{-1}, beta_hat).
class CoveringHead final : public ScoreHead {
public:
    static constexpr double kEigenFloor = 1e-6;

    CoveringHead(Eigen::Index d, double nu);

    HeadKind kind() const override { return HeadKind::covering; }
    std::unique_ptr<ScoreHead> clone() const override { return std::make_unique<CoveringHead>(*this); }
    Eigen::Index latent_dim() const override { return d_; }
    Eigen::Index num_params() const override { return d_ * (d_ + 1) / 2 + d_; }
    Vector parameters() const override;
    void set_parameters(const Eigen::Ref<const Vector>& theta) override;

    Matrix forward(const Matrix& U, const Vector& y, const Vector& t) const override;
    Matrix backward(const Matrix& U, const Vector& y, const Vector& t, const Matrix& G_psi,
                    Eigen::Ref<Vector> grad) const override;

    double nu() const { return nu_; }
    /// Symmetric P, before the eigenvalue floor.
    Matrix precision() const;
    void set_precision(const Matrix& P);
    const Vector& beta() const { return beta_; }
    void set_beta(const Vector& beta) { beta_ = beta; }

private:
    Matrix floored_precision() const;
    Matrix system(const Matrix& P, double t) const;

    Eigen::Index d_;
    double nu_;
    Vector lower_;  // column-major lower triangle of P
    Vector beta_;
};

/// Fully connected ReLU network on features (u, y, t, alpha(t), h(t)).
class MlpHead final : public ScoreHead {
public:
    static constexpr Eigen::Index kTimeFeatures = 3;

    /// hidden: widths of the hidden layers, e.g. {128, 128}.
    MlpHead(Eigen::Index d, std::vector<Eigen::Index> hidden, std::uint64_t seed);

    HeadKind kind() const override { return HeadKind::mlp; }
    std::unique_ptr<ScoreHead> clone() const override { return std::make_unique<MlpHead>(*this); }
    Eigen::Index latent_dim() const override { return d_; }
    Eigen::Index num_params() const override;
    Vector parameters() const override;
    void set_parameters(const Eigen::Ref<const Vector>& theta) override;

    Matrix forward(const Matrix& U, const Vector& y, const Vector& t) const override;
    Matrix backward(const Matrix& U, const Vector& y, const Vector& t, const Matrix& G_psi,
                    Eigen::Ref<Vector> grad) const override;

    const std::vector<Eigen::Index>& hidden() const { return hidden_; }
    const std::vector<Matrix>& weights() const { return weights_; }
    const std::vector<Vector>& biases() const { return biases_; }
    void set_layer(std::size_t l, Matrix W, Vector b);

private:
    Matrix features(const Matrix& U, const Vector& y, const Vector& t) const;

    Eigen::Index d_;
    std::vector<Eigen::Index> hidden_;
    std::vector<Matrix> weights_;  // layer l: out x in
    std::vector<Vector> biases_;
};

/// s(x, y, t) = (V psi(V^T x, y, t) - x) / h(t).
class EncoderDecoderScore final : public ScoreFunction {
public:
    EncoderDecoderScore(Matrix V, std::unique_ptr<ScoreHead> head);
    EncoderDecoderScore(const EncoderDecoderScore& other);
    EncoderDecoderScore& operator=(const EncoderDecoderScore& other);
    EncoderDecoderScore(EncoderDecoderScore&&) noexcept = default;
    EncoderDecoderScore& operator=(EncoderDecoderScore&&) noexcept = default;

    Eigen::Index dim() const override { return V_.rows(); }
    Matrix evaluate(const Matrix& X, const Vector& y, const Vector& t) const override;
    std::string identity() const override;

    const Matrix& V() const { return V_; }
    void set_V(const Matrix& V);
    const ScoreHead& head() const { return *head_; }
    ScoreHead& head() { return *head_; }

    Eigen::Index num_params() const { return V_.size() + head_->num_params(); }
    /// [vec(V) column-major | head parameters]
    Vector parameters() const;
    void set_parameters(const Eigen::Ref<const Vector>& theta);

    /// Mean over rows of ||target_i - s(X_i, y_i, t_i)||^2; when grad is
    /// non-null it receives the exact parameter gradient.
    double squared_error(const Matrix& X, const Vector& y, const Vector& t, const Matrix& target,
                         Vector* grad) const;

private:
    Matrix V_;
    std::unique_ptr<ScoreHead> head_;
};

/// Random orthonormal V, P = I, beta = 0.
EncoderDecoderScore make_covering_model(Eigen::Index D, Eigen::Index d, double nu, std::uint64_t seed);

EncoderDecoderScore make_mlp_model(Eigen::Index D, Eigen::Index d, std::vector<Eigen::Index> hidden,
                                   std::uint64_t seed);

/// Orthonormal basis for col(V) via thin QR. RankError when V is
/// numerically rank deficient.
Matrix extract_subspace(const EncoderDecoderScore& model);
Matrix orthonormalize(const Matrix& V);

}  // namespace rcgdm
