// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include "rcgdm/score.hpp"

#include <cstdio>
#include <cstring>

#include "rcgdm/world.hpp"

namespace rcgdm {

namespace {

bool shared_time(const Vector& t) { return t.size() == 0 || t.minCoeff() == t.maxCoeff(); }

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

Matrix ScoreFunction::evaluate_at(const Matrix& X, double y, double t) const {
    return evaluate(X, Vector::Constant(X.rows(), y), Vector::Constant(X.rows(), t));
}

Vector ScoreFunction::operator()(const Eigen::Ref<const Vector>& x, double y, double t) const {
    const Matrix row = x.transpose();
    return evaluate_at(row, y, t).row(0).transpose();
}

Matrix AnalyticScore::evaluate(const Matrix& X, const Vector& y, const Vector& t) const {
    if (shared_time(t) && t.size() > 0) return oracle_.analytic_score_batch(X, y, t(0));
    Matrix out(X.rows(), X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        out.row(i) = oracle_.analytic_score(X.row(i).transpose(), y(i), t(i)).transpose();
    return out;
}

Matrix AnalyticScore::evaluate_at(const Matrix& X, double y, double t) const {
    return oracle_.analytic_score_batch(X, Vector::Constant(X.rows(), y), t);
}

const char* head_name(HeadKind kind) { return kind == HeadKind::covering ? "covering" : "mlp"; }

HeadKind parse_head(const std::string& name) {
    if (name == "covering") return HeadKind::covering;
    if (name == "mlp") return HeadKind::mlp;
    throw ValidationError("unknown score variant '" + name + "' (expected covering or mlp)");
}

// ---------------------------------------------------------------------------
// CoveringHead

CoveringHead::CoveringHead(Eigen::Index d, double nu)
    : d_(d), nu_(nu), lower_(Vector::Zero(d * (d + 1) / 2)), beta_(Vector::Zero(d)) {
    if (!(nu > 0.0)) throw ValidationError("CoveringHead: nu must be > 0");
    set_precision(Matrix::Identity(d, d));
}

Vector CoveringHead::parameters() const {
    Vector theta(num_params());
    theta << lower_, beta_;
    return theta;
}

void CoveringHead::set_parameters(const Eigen::Ref<const Vector>& theta) {
    if (theta.size() != num_params()) throw DimensionError("CoveringHead: parameter length mismatch");
    lower_ = theta.head(lower_.size());
    beta_ = theta.tail(d_);
}

Matrix CoveringHead::precision() const {
    Matrix P(d_, d_);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < d_; ++j)
        for (Eigen::Index i = j; i < d_; ++i, ++k) P(i, j) = P(j, i) = lower_(k);
    return P;
}

void CoveringHead::set_precision(const Matrix& P) {
    if (P.rows() != d_ || P.cols() != d_) throw DimensionError("CoveringHead: precision must be d x d");
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < d_; ++j)
        for (Eigen::Index i = j; i < d_; ++i, ++k) lower_(k) = 0.5 * (P(i, j) + P(j, i));
}

Matrix CoveringHead::floored_precision() const {
    Matrix P = precision();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(P);
    if (eig.eigenvalues().minCoeff() >= kEigenFloor) return P;
    const Vector clamped = eig.eigenvalues().cwiseMax(kEigenFloor);
    return eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix CoveringHead::system(const Matrix& P, double t) const {
    const double a = DiffusionSchedule::alpha(t);
    const double h = DiffusionSchedule::h(t);
    Matrix M = (h / (nu_ * nu_)) * beta_ * beta_.transpose() + h * P;
    M.diagonal().array() += a * a;
    return M;
}

Matrix CoveringHead::forward(const Matrix& U, const Vector& y, const Vector& t) const {
    const Matrix P = floored_precision();
    const double inv_nu2 = 1.0 / (nu_ * nu_);
    Matrix psi(U.rows(), d_);
    if (shared_time(t)) {
        if (U.rows() == 0) return psi;
        const double a = DiffusionSchedule::alpha(t(0));
        const double h = DiffusionSchedule::h(t(0));
        Eigen::LLT<Matrix> llt(system(P, t(0)));
        Matrix W = a * U;
        W.noalias() += (h * inv_nu2) * y * beta_.transpose();
        psi = a * llt.solve(W.transpose()).transpose();
        return psi;
    }
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
        const double a = DiffusionSchedule::alpha(t(i));
        const double h = DiffusionSchedule::h(t(i));
        Eigen::LLT<Matrix> llt(system(P, t(i)));
        const Vector w = a * U.row(i).transpose() + (h * inv_nu2 * y(i)) * beta_;
        psi.row(i) = a * llt.solve(w).transpose();
    }
    return psi;
}

Matrix CoveringHead::backward(const Matrix& U, const Vector& y, const Vector& t, const Matrix& G_psi,
                              Eigen::Ref<Vector> grad) const {
    // The eigenvalue floor is treated as identity in the backward pass.
    const Matrix P = floored_precision();
    const double inv_nu2 = 1.0 / (nu_ * nu_);
    Matrix gP = Matrix::Zero(d_, d_);
    Vector gbeta = Vector::Zero(d_);
    Matrix G_u(U.rows(), d_);

    for (Eigen::Index i = 0; i < U.rows(); ++i) {
        const double a = DiffusionSchedule::alpha(t(i));
        const double h = DiffusionSchedule::h(t(i));
        const double c = h * inv_nu2;
        Eigen::LLT<Matrix> llt(system(P, t(i)));
        const Vector w = a * U.row(i).transpose() + (c * y(i)) * beta_;
        const Vector b = llt.solve(w);
        const Vector q = llt.solve(G_psi.row(i).transpose());
        const Vector g_w = a * q;
        // dL/dM = -alpha q b^T
        const Matrix G_M = -a * q * b.transpose();
        gP += h * G_M;
        gbeta += c * ((G_M + G_M.transpose()) * beta_) + (c * y(i)) * g_w;
        G_u.row(i) = (a * g_w).transpose();
    }

    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < d_; ++j)
        for (Eigen::Index i = j; i < d_; ++i, ++k) grad(k) += (i == j) ? gP(i, i) : gP(i, j) + gP(j, i);
    grad.tail(d_) += gbeta;
    return G_u;
}

// ---------------------------------------------------------------------------
// MlpHead

MlpHead::MlpHead(Eigen::Index d, std::vector<Eigen::Index> hidden, std::uint64_t seed)
    : d_(d), hidden_(std::move(hidden)) {
    if (hidden_.empty()) throw ValidationError("MlpHead: need at least one hidden layer");
    Rng rng(seed);
    Eigen::Index in = d_ + 1 + kTimeFeatures;
    std::vector<Eigen::Index> outs = hidden_;
    outs.push_back(d_);
    for (std::size_t l = 0; l < outs.size(); ++l) {
        const bool last = l + 1 == outs.size();
        const double scale = std::sqrt(2.0 / static_cast<double>(in)) * (last ? 0.1 : 1.0);
        weights_.push_back(scale * rng.normal_matrix(outs[l], in));
        biases_.push_back(Vector::Zero(outs[l]));
        in = outs[l];
    }
}

Eigen::Index MlpHead::num_params() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
    return n;
}

Vector MlpHead::parameters() const {
    Vector theta(num_params());
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        theta.segment(k, weights_[l].size()) = weights_[l].reshaped();
        k += weights_[l].size();
        theta.segment(k, biases_[l].size()) = biases_[l];
        k += biases_[l].size();
    }
    return theta;
}

void MlpHead::set_parameters(const Eigen::Ref<const Vector>& theta) {
    if (theta.size() != num_params()) throw DimensionError("MlpHead: parameter length mismatch");
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        weights_[l].reshaped() = theta.segment(k, weights_[l].size());
        k += weights_[l].size();
        biases_[l] = theta.segment(k, biases_[l].size());
        k += biases_[l].size();
    }
}

void MlpHead::set_layer(std::size_t l, Matrix W, Vector b) {
    if (l >= weights_.size() || W.rows() != weights_[l].rows() || W.cols() != weights_[l].cols() ||
        b.size() != biases_[l].size())
        throw DimensionError("MlpHead: layer shape mismatch");
    weights_[l] = std::move(W);
    biases_[l] = std::move(b);
}

Matrix MlpHead::features(const Matrix& U, const Vector& y, const Vector& t) const {
    Matrix F(U.rows(), d_ + 1 + kTimeFeatures);
    F.leftCols(d_) = U;
    F.col(d_) = y;
    F.col(d_ + 1) = t;
    F.col(d_ + 2) = t.unaryExpr([](double s) { return DiffusionSchedule::alpha(s); });
    F.col(d_ + 3) = t.unaryExpr([](double s) { return DiffusionSchedule::h(s); });
    return F;
}

Matrix MlpHead::forward(const Matrix& U, const Vector& y, const Vector& t) const {
    Matrix act = features(U, y, t);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Matrix z = act * weights_[l].transpose();
        z.rowwise() += biases_[l].transpose();
        act = (l + 1 == weights_.size()) ? std::move(z) : Matrix(z.cwiseMax(0.0));
    }
    return act;
}

Matrix MlpHead::backward(const Matrix& U, const Vector& y, const Vector& t, const Matrix& G_psi,
                         Eigen::Ref<Vector> grad) const {
    const std::size_t L = weights_.size();
    std::vector<Matrix> acts;  // inputs to each layer
    acts.reserve(L);
    acts.push_back(features(U, y, t));
    for (std::size_t l = 0; l + 1 < L; ++l) {
        Matrix z = acts.back() * weights_[l].transpose();
        z.rowwise() += biases_[l].transpose();
        acts.push_back(z.cwiseMax(0.0));
    }

    // Offsets of each layer's block inside the flat parameter vector.
    std::vector<Eigen::Index> offset(L);
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < L; ++l) {
        offset[l] = k;
        k += weights_[l].size() + biases_[l].size();
    }

    Matrix G = G_psi;
    for (std::size_t l = L; l-- > 0;) {
        const Matrix gW = G.transpose() * acts[l];
        grad.segment(offset[l], gW.size()) += gW.reshaped();
        grad.segment(offset[l] + gW.size(), biases_[l].size()) += G.colwise().sum().transpose();
        Matrix prev = G * weights_[l];
        // acts[l] > 0 exactly where the pre-activation was positive.
        if (l > 0) prev = prev.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
        G = std::move(prev);
    }
    return G.leftCols(d_);
}

// ---------------------------------------------------------------------------
// EncoderDecoderScore

EncoderDecoderScore::EncoderDecoderScore(Matrix V, std::unique_ptr<ScoreHead> head)
    : V_(std::move(V)), head_(std::move(head)) {
    if (!head_) throw ValidationError("EncoderDecoderScore: null head");
    if (V_.cols() != head_->latent_dim()) throw DimensionError("EncoderDecoderScore: V and head disagree on d");
}

EncoderDecoderScore::EncoderDecoderScore(const EncoderDecoderScore& other)
    : V_(other.V_), head_(other.head_->clone()) {}

EncoderDecoderScore& EncoderDecoderScore::operator=(const EncoderDecoderScore& other) {
    if (this != &other) {
        V_ = other.V_;
        head_ = other.head_->clone();
    }
    return *this;
}

void EncoderDecoderScore::set_V(const Matrix& V) {
    if (V.rows() != V_.rows() || V.cols() != V_.cols()) throw DimensionError("set_V: shape mismatch");
    V_ = V;
}

Vector EncoderDecoderScore::parameters() const {
    Vector theta(num_params());
    theta.head(V_.size()) = V_.reshaped();
    theta.tail(head_->num_params()) = head_->parameters();
    return theta;
}

void EncoderDecoderScore::set_parameters(const Eigen::Ref<const Vector>& theta) {
    if (theta.size() != num_params()) throw DimensionError("EncoderDecoderScore: parameter length mismatch");
    V_.reshaped() = theta.head(V_.size());
    head_->set_parameters(theta.tail(head_->num_params()));
}

Matrix EncoderDecoderScore::evaluate(const Matrix& X, const Vector& y, const Vector& t) const {
    const Matrix U = X * V_;
    const Matrix psi = head_->forward(U, y, t);
    Matrix S = psi * V_.transpose() - X;
    const Vector inv_h = t.unaryExpr([](double s) { return 1.0 / DiffusionSchedule::h(s); });
    return inv_h.asDiagonal() * S;
}

double EncoderDecoderScore::squared_error(const Matrix& X, const Vector& y, const Vector& t, const Matrix& target,
                                          Vector* grad) const {
    const auto n = static_cast<double>(X.rows());
    const Matrix U = X * V_;
    const Matrix psi = head_->forward(U, y, t);
    const Vector inv_h = t.unaryExpr([](double s) { return 1.0 / DiffusionSchedule::h(s); });
    const Matrix R = inv_h.asDiagonal() * (psi * V_.transpose() - X) - target;
    const double loss = R.squaredNorm() / n;
    if (grad == nullptr) return loss;

    grad->setZero(num_params());
    // dL/d(V psi_i) = 2 r_i / (n h_i)
    const Matrix G_out = (2.0 / n) * (inv_h.asDiagonal() * R);
    const Matrix G_psi = G_out * V_;
    Eigen::Ref<Vector> head_grad = grad->tail(head_->num_params());
    const Matrix G_u = head_->backward(U, y, t, G_psi, head_grad);
    Matrix gV = G_out.transpose() * psi;
    gV.noalias() += X.transpose() * G_u;
    grad->head(V_.size()) = gV.reshaped();
    return loss;
}

std::string EncoderDecoderScore::identity() const {
    const Vector theta = parameters();
    std::uint64_t h = fnv1a(head_name(head_->kind()), std::strlen(head_name(head_->kind())));
    h = fnv1a(theta.data(), static_cast<std::size_t>(theta.size()) * sizeof(double), h);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string("model:") + head_name(head_->kind()) + ":" + buf;
}

EncoderDecoderScore make_covering_model(Eigen::Index D, Eigen::Index d, double nu, std::uint64_t seed) {
    return EncoderDecoderScore(sample_orthonormal(D, d, derive_seed(seed, stream::model_init)),
                               std::make_unique<CoveringHead>(d, nu));
}

EncoderDecoderScore make_mlp_model(Eigen::Index D, Eigen::Index d, std::vector<Eigen::Index> hidden,
                                   std::uint64_t seed) {
    const std::uint64_t s = derive_seed(seed, stream::model_init);
    return EncoderDecoderScore(sample_orthonormal(D, d, s),
                               std::make_unique<MlpHead>(d, std::move(hidden), mix_seed(s)));
}

Matrix orthonormalize(const Matrix& V) {
    const Eigen::Index D = V.rows();
    const Eigen::Index d = V.cols();
    if (d > D) throw DimensionError("orthonormalize: more columns than rows");
    Eigen::HouseholderQR<Matrix> qr(V);
    const Vector diag = qr.matrixQR().diagonal();
    const double top = diag.cwiseAbs().maxCoeff();
    if (!(top > 0.0) || diag.cwiseAbs().minCoeff() < 1e-10 * top)
        throw RankError("extract_subspace: V is numerically rank deficient");
    Matrix Q = qr.householderQ() * Matrix::Identity(D, d);
    for (Eigen::Index j = 0; j < d; ++j)
        if (diag(j) < 0.0) Q.col(j) *= -1.0;
    return Q;
}

Matrix extract_subspace(const EncoderDecoderScore& model) { return orthonormalize(model.V()); }

}  // namespace rcgdm
