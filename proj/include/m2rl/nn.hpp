#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "m2rl/binio.hpp"
#include "m2rl/error.hpp"
#include "m2rl/rng.hpp"

namespace m2rl {

// Actor-critic network: three 2x2/stride-1/no-padding convolutions (64
// filters, leaky ReLU) into separate 64-unit dense layers for the actor and
// critic, with affine heads. Templated on the scalar so gradient tests can
// instantiate the exact same code in double precision.

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

constexpr double kLeakySlope = 0.01;

struct NetConfig {
    int in_channels = 15;  // 16 with the soft action mask
    int height = 9;
    int width = 13;
    int conv_channels = 64;
    int fc_units = 64;
    int actions = 117;

    // Spatial sizes after each 2x2 valid convolution.
    int h1() const { return height - 1; }
    int w1() const { return width - 1; }
    int h2() const { return height - 2; }
    int w2() const { return width - 2; }
    int h3() const { return height - 3; }
    int w3() const { return width - 3; }
    int flatten() const { return conv_channels * h3() * w3(); }

    bool operator==(const NetConfig&) const = default;
};

// Parameters (and, reusing the same shape, gradients and Adam moments).
// Biases are stored as 1xN matrices so everything visits uniformly.
template <typename S>
struct PolicyNet {
    NetConfig cfg;
    Mat<S> conv1_w, conv1_b;
    Mat<S> conv2_w, conv2_b;
    Mat<S> conv3_w, conv3_b;
    Mat<S> fc_actor_w, fc_actor_b;
    Mat<S> fc_critic_w, fc_critic_b;
    Mat<S> actor_head_w, actor_head_b;
    Mat<S> critic_head_w, critic_head_b;

    static constexpr int kTensorCount = 14;

    static constexpr std::array<const char*, kTensorCount> tensor_names() {
        return {"conv1_w",     "conv1_b",     "conv2_w",       "conv2_b",      "conv3_w",
                "conv3_b",     "fc_actor_w",  "fc_actor_b",    "fc_critic_w",  "fc_critic_b",
                "actor_head_w", "actor_head_b", "critic_head_w", "critic_head_b"};
    }

    std::array<Mat<S>*, kTensorCount> tensors() {
        return {&conv1_w,     &conv1_b,     &conv2_w,       &conv2_b,      &conv3_w,
                &conv3_b,     &fc_actor_w,  &fc_actor_b,    &fc_critic_w,  &fc_critic_b,
                &actor_head_w, &actor_head_b, &critic_head_w, &critic_head_b};
    }
    std::array<const Mat<S>*, kTensorCount> tensors() const {
        return {&conv1_w,     &conv1_b,     &conv2_w,       &conv2_b,      &conv3_w,
                &conv3_b,     &fc_actor_w,  &fc_actor_b,    &fc_critic_w,  &fc_critic_b,
                &actor_head_w, &actor_head_b, &critic_head_w, &critic_head_b};
    }

    template <typename F>
    void for_each(F&& f) {
        const auto names = tensor_names();
        const auto ptrs = tensors();
        for (int i = 0; i < kTensorCount; ++i)
            f(names[i], *ptrs[i]);
    }
    template <typename F>
    void for_each(F&& f) const {
        const auto names = tensor_names();
        const auto ptrs = tensors();
        for (int i = 0; i < kTensorCount; ++i)
            f(names[i], *ptrs[i]);
    }

    static PolicyNet zeros(const NetConfig& cfg) {
        PolicyNet net;
        net.cfg = cfg;
        const int conv = cfg.conv_channels;
        net.conv1_w = Mat<S>::Zero(conv, cfg.in_channels * 4);
        net.conv2_w = Mat<S>::Zero(conv, conv * 4);
        net.conv3_w = Mat<S>::Zero(conv, conv * 4);
        net.conv1_b = Mat<S>::Zero(1, conv);
        net.conv2_b = Mat<S>::Zero(1, conv);
        net.conv3_b = Mat<S>::Zero(1, conv);
        net.fc_actor_w = Mat<S>::Zero(cfg.fc_units, cfg.flatten());
        net.fc_actor_b = Mat<S>::Zero(1, cfg.fc_units);
        net.fc_critic_w = Mat<S>::Zero(cfg.fc_units, cfg.flatten());
        net.fc_critic_b = Mat<S>::Zero(1, cfg.fc_units);
        net.actor_head_w = Mat<S>::Zero(cfg.actions, cfg.fc_units);
        net.actor_head_b = Mat<S>::Zero(1, cfg.actions);
        net.critic_head_w = Mat<S>::Zero(1, cfg.fc_units);
        net.critic_head_b = Mat<S>::Zero(1, 1);
        return net;
    }

    void set_zero() {
        for (Mat<S>* t : tensors())
            t->setZero();
    }

    template <typename T>
    PolicyNet<T> cast() const {
        PolicyNet<T> out = PolicyNet<T>::zeros(cfg);
        const auto src = tensors();
        const auto dst = out.tensors();
        for (int i = 0; i < kTensorCount; ++i)
            *dst[i] = src[i]->template cast<T>();
        return out;
    }
};

namespace detail {

// Thin orthogonal matrix (rows orthonormal when rows <= cols), computed in
// double and scaled by gain. Sign-fixed via diag(R) so it is unique.
inline Eigen::MatrixXd orthogonal(int rows, int cols, double gain, Rng& rng) {
    const int big = std::max(rows, cols);
    const int small = std::min(rows, cols);
    Eigen::MatrixXd a(big, small);
    for (int i = 0; i < big; ++i)
        for (int j = 0; j < small; ++j)
            a(i, j) = rng.gaussian();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(small);
    for (int j = 0; j < small; ++j)
        if (r(j, j) < 0)
            q.col(j) = -q.col(j);
    Eigen::MatrixXd w = rows <= cols ? Eigen::MatrixXd(q.transpose()) : q;
    return gain * w;
}

}  // namespace detail

// Orthogonal initialization: sqrt(2) gain on hidden layers, 0.01 on the
// actor head (keeps the initial policy near uniform) and 1.0 on the critic
// head. Biases start at zero. Deterministic per seed.
template <typename S>
PolicyNet<S> init_net(const NetConfig& cfg, uint64_t seed) {
    Rng rng(derive_seed(seed, 0x6e657469u));  // dedicated init stream
    PolicyNet<S> net = PolicyNet<S>::zeros(cfg);
    const double hidden_gain = std::sqrt(2.0);
    net.conv1_w = detail::orthogonal(net.conv1_w.rows(), net.conv1_w.cols(), hidden_gain, rng)
                      .template cast<S>();
    net.conv2_w = detail::orthogonal(net.conv2_w.rows(), net.conv2_w.cols(), hidden_gain, rng)
                      .template cast<S>();
    net.conv3_w = detail::orthogonal(net.conv3_w.rows(), net.conv3_w.cols(), hidden_gain, rng)
                      .template cast<S>();
    net.fc_actor_w =
        detail::orthogonal(net.fc_actor_w.rows(), net.fc_actor_w.cols(), hidden_gain, rng)
            .template cast<S>();
    net.fc_critic_w =
        detail::orthogonal(net.fc_critic_w.rows(), net.fc_critic_w.cols(), hidden_gain, rng)
            .template cast<S>();
    net.actor_head_w =
        detail::orthogonal(net.actor_head_w.rows(), net.actor_head_w.cols(), 0.01, rng).template cast<S>();
    net.critic_head_w =
        detail::orthogonal(net.critic_head_w.rows(), net.critic_head_w.cols(), 1.0, rng).template cast<S>();
    return net;
}

// ---------------------------------------------------------------- forward

template <typename S>
struct ForwardCache {
    int batch = 0;
    Mat<S> input;                    // [B, C*H*W]
    Mat<S> cols1, cols2, cols3;      // im2col patches per conv layer
    Mat<S> z1, z2, z3;               // conv pre-activations [B*oh*ow, conv]
    Mat<S> a1, a2, a3;               // conv post-activations
    Mat<S> flat;                     // [B, flatten]
    Mat<S> za, aa, zc, ac;           // dense pre/post activations
    Mat<S> logits;                   // [B, actions]
    Vec<S> values;                   // [B]
};

namespace detail {

template <typename S>
S leaky(S x) {
    return x >= S(0) ? x : static_cast<S>(kLeakySlope) * x;
}

template <typename S>
S leaky_grad(S z) {
    return z >= S(0) ? S(1) : static_cast<S>(kLeakySlope);
}

// [B, C*H*W] -> [B*oh*ow, C*4] patches for a 2x2 valid convolution.
template <typename S>
void im2col(const Mat<S>& x, int channels, int height, int width, Mat<S>& cols) {
    const int batch = static_cast<int>(x.rows());
    const int oh = height - 1;
    const int ow = width - 1;
    cols.resize(static_cast<Eigen::Index>(batch) * oh * ow, channels * 4);
    for (int b = 0; b < batch; ++b) {
        const S* row = x.row(b).data();
        for (int r = 0; r < oh; ++r) {
            for (int c = 0; c < ow; ++c) {
                S* out = cols.row((static_cast<Eigen::Index>(b) * oh + r) * ow + c).data();
                for (int ch = 0; ch < channels; ++ch) {
                    const S* plane = row + ch * height * width;
                    out[ch * 4 + 0] = plane[r * width + c];
                    out[ch * 4 + 1] = plane[r * width + c + 1];
                    out[ch * 4 + 2] = plane[(r + 1) * width + c];
                    out[ch * 4 + 3] = plane[(r + 1) * width + c + 1];
                }
            }
        }
    }
}

// Transpose of im2col: scatter-add patch gradients back onto the image.
template <typename S>
void col2im(const Mat<S>& cols, int channels, int height, int width, Mat<S>& x) {
    const int oh = height - 1;
    const int ow = width - 1;
    const int batch = static_cast<int>(cols.rows() / (oh * ow));
    x = Mat<S>::Zero(batch, channels * height * width);
    for (int b = 0; b < batch; ++b) {
        S* row = x.row(b).data();
        for (int r = 0; r < oh; ++r) {
            for (int c = 0; c < ow; ++c) {
                const S* in = cols.row((static_cast<Eigen::Index>(b) * oh + r) * ow + c).data();
                for (int ch = 0; ch < channels; ++ch) {
                    S* plane = row + ch * height * width;
                    plane[r * width + c] += in[ch * 4 + 0];
                    plane[r * width + c + 1] += in[ch * 4 + 1];
                    plane[(r + 1) * width + c] += in[ch * 4 + 2];
                    plane[(r + 1) * width + c + 1] += in[ch * 4 + 3];
                }
            }
        }
    }
}

// Reorder conv output [B*oh*ow, conv] into image layout [B, conv*oh*ow].
template <typename S>
void to_planes(const Mat<S>& y, int batch, int conv, int oh, int ow, Mat<S>& planes) {
    planes.resize(batch, conv * oh * ow);
    for (int b = 0; b < batch; ++b) {
        S* row = planes.row(b).data();
        for (int p = 0; p < oh * ow; ++p) {
            const S* in = y.row(static_cast<Eigen::Index>(b) * oh * ow + p).data();
            for (int ch = 0; ch < conv; ++ch)
                row[ch * oh * ow + p] = in[ch];
        }
    }
}

template <typename S>
void from_planes(const Mat<S>& planes, int batch, int conv, int oh, int ow, Mat<S>& y) {
    y.resize(static_cast<Eigen::Index>(batch) * oh * ow, conv);
    for (int b = 0; b < batch; ++b) {
        const S* row = planes.row(b).data();
        for (int p = 0; p < oh * ow; ++p) {
            S* out = y.row(static_cast<Eigen::Index>(b) * oh * ow + p).data();
            for (int ch = 0; ch < conv; ++ch)
                out[ch] = row[ch * oh * ow + p];
        }
    }
}

}  // namespace detail

// obs: [B, C*H*W], one observation per row.
template <typename S>
void forward(const PolicyNet<S>& net, const Mat<S>& obs, ForwardCache<S>& cache) {
    const NetConfig& cfg = net.cfg;
    if (obs.cols() != cfg.in_channels * cfg.height * cfg.width)
        throw std::invalid_argument(
            "observation size mismatch: expected " +
            std::to_string(cfg.in_channels * cfg.height * cfg.width) + " values, got " +
            std::to_string(obs.cols()));

    const int batch = static_cast<int>(obs.rows());
    cache.batch = batch;
    cache.input = obs;

    auto conv_layer = [&](const Mat<S>& in_planes, int in_ch, int h, int w, const Mat<S>& weight,
                          const Mat<S>& bias, Mat<S>& cols, Mat<S>& z, Mat<S>& a, Mat<S>& out) {
        detail::im2col(in_planes, in_ch, h, w, cols);
        z.noalias() = cols * weight.transpose();
        z.rowwise() += bias.row(0);
        a = z.unaryExpr([](S v) { return detail::leaky(v); });
        detail::to_planes(a, batch, cfg.conv_channels, h - 1, w - 1, out);
    };

    Mat<S> planes1, planes2;
    conv_layer(obs, cfg.in_channels, cfg.height, cfg.width, net.conv1_w, net.conv1_b, cache.cols1,
               cache.z1, cache.a1, planes1);
    conv_layer(planes1, cfg.conv_channels, cfg.h1(), cfg.w1(), net.conv2_w, net.conv2_b,
               cache.cols2, cache.z2, cache.a2, planes2);
    conv_layer(planes2, cfg.conv_channels, cfg.h2(), cfg.w2(), net.conv3_w, net.conv3_b,
               cache.cols3, cache.z3, cache.a3, cache.flat);

    cache.za.noalias() = cache.flat * net.fc_actor_w.transpose();
    cache.za.rowwise() += net.fc_actor_b.row(0);
    cache.aa = cache.za.unaryExpr([](S v) { return detail::leaky(v); });

    cache.zc.noalias() = cache.flat * net.fc_critic_w.transpose();
    cache.zc.rowwise() += net.fc_critic_b.row(0);
    cache.ac = cache.zc.unaryExpr([](S v) { return detail::leaky(v); });

    cache.logits.noalias() = cache.aa * net.actor_head_w.transpose();
    cache.logits.rowwise() += net.actor_head_b.row(0);

    cache.values.noalias() = cache.ac * net.critic_head_w.transpose();
    cache.values.array() += net.critic_head_b(0, 0);
}

// Exact analytic gradients given upstream dlogits/dvalues. Overwrites grads.
template <typename S>
void backward(const PolicyNet<S>& net, const ForwardCache<S>& cache, const Mat<S>& dlogits,
              const Vec<S>& dvalues, PolicyNet<S>& grads) {
    const NetConfig& cfg = net.cfg;
    const int batch = cache.batch;

    grads.actor_head_w.noalias() = dlogits.transpose() * cache.aa;
    grads.actor_head_b = dlogits.colwise().sum();
    Mat<S> daa = dlogits * net.actor_head_w;

    grads.critic_head_w.noalias() = dvalues.transpose() * cache.ac;
    grads.critic_head_b(0, 0) = dvalues.sum();
    Mat<S> dac = dvalues * net.critic_head_w;

    Mat<S> dza = daa.cwiseProduct(cache.za.unaryExpr([](S v) { return detail::leaky_grad(v); }));
    Mat<S> dzc = dac.cwiseProduct(cache.zc.unaryExpr([](S v) { return detail::leaky_grad(v); }));

    grads.fc_actor_w.noalias() = dza.transpose() * cache.flat;
    grads.fc_actor_b = dza.colwise().sum();
    grads.fc_critic_w.noalias() = dzc.transpose() * cache.flat;
    grads.fc_critic_b = dzc.colwise().sum();

    Mat<S> dflat = dza * net.fc_actor_w;
    dflat.noalias() += dzc * net.fc_critic_w;

    auto conv_backward = [&](const Mat<S>& dout_planes, int oh, int ow, const Mat<S>& cols,
                             const Mat<S>& z, const Mat<S>& weight, Mat<S>& gw, Mat<S>& gb,
                             int in_ch, int in_h, int in_w, Mat<S>* din_planes) {
        Mat<S> dy;
        detail::from_planes(dout_planes, batch, cfg.conv_channels, oh, ow, dy);
        Mat<S> dz = dy.cwiseProduct(z.unaryExpr([](S v) { return detail::leaky_grad(v); }));
        gw.noalias() = dz.transpose() * cols;
        gb = dz.colwise().sum();
        if (din_planes != nullptr) {
            Mat<S> dcols = dz * weight;
            detail::col2im(dcols, in_ch, in_h, in_w, *din_planes);
        }
    };

    Mat<S> dplanes2, dplanes1;
    conv_backward(dflat, cfg.h3(), cfg.w3(), cache.cols3, cache.z3, net.conv3_w, grads.conv3_w,
                  grads.conv3_b, cfg.conv_channels, cfg.h2(), cfg.w2(), &dplanes2);
    conv_backward(dplanes2, cfg.h2(), cfg.w2(), cache.cols2, cache.z2, net.conv2_w, grads.conv2_w,
                  grads.conv2_b, cfg.conv_channels, cfg.h1(), cfg.w1(), &dplanes1);
    conv_backward(dplanes1, cfg.h1(), cfg.w1(), cache.cols1, cache.z1, net.conv1_w, grads.conv1_w,
                  grads.conv1_b, cfg.in_channels, cfg.height, cfg.width, nullptr);
}

// ---------------------------------------------------------------- Adam

struct AdamConfig {
    double lr = 2.5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename S>
struct AdamState {
    PolicyNet<S> m;
    PolicyNet<S> v;
    int64_t step = 0;

    static AdamState zeros(const NetConfig& cfg) {
        return AdamState{PolicyNet<S>::zeros(cfg), PolicyNet<S>::zeros(cfg), 0};
    }
};

namespace detail {

template <typename S>
void adam_update_tensor(Mat<S>& param, Mat<S>& m, Mat<S>& v, const Mat<S>& grad, int64_t step,
                        const AdamConfig& hp) {
    const S b1 = static_cast<S>(hp.beta1);
    const S b2 = static_cast<S>(hp.beta2);
    m = b1 * m + (S(1) - b1) * grad;
    v = b2 * v + (S(1) - b2) * grad.cwiseProduct(grad);
    const S c1 = static_cast<S>(1.0 / (1.0 - std::pow(hp.beta1, static_cast<double>(step))));
    const S c2 = static_cast<S>(1.0 / (1.0 - std::pow(hp.beta2, static_cast<double>(step))));
    param.array() -= static_cast<S>(hp.lr) * (m.array() * c1) /
                     ((v.array() * c2).sqrt() + static_cast<S>(hp.eps));
}

}  // namespace detail

// Standard bias-corrected Adam step. Throws NonFiniteError on a non-finite
// gradient so the trainer can halt with a diagnostic.
template <typename S>
void adam_step(PolicyNet<S>& net, AdamState<S>& state, const PolicyNet<S>& grads,
               const AdamConfig& hp) {
    const auto names = PolicyNet<S>::tensor_names();
    const auto gs = grads.tensors();
    for (int i = 0; i < PolicyNet<S>::kTensorCount; ++i)
        if (!gs[i]->allFinite())
            throw NonFiniteError(std::string("non-finite gradient in ") + names[i]);
    ++state.step;
    const auto ps = net.tensors();
    const auto ms = state.m.tensors();
    const auto vs = state.v.tensors();
    for (int i = 0; i < PolicyNet<S>::kTensorCount; ++i)
        detail::adam_update_tensor(*ps[i], *ms[i], *vs[i], *gs[i], state.step, hp);
}

// ---------------------------------------------------------------- checkpoints

constexpr uint32_t kNetMagic = 0x4d32524cu;  // "M2RL"
constexpr uint32_t kNetVersion = 1;

inline void save_net(std::ostream& out, const PolicyNet<float>& net, const AdamState<float>& adam) {
    binio::write_pod<uint32_t>(out, kNetMagic);
    binio::write_pod<uint32_t>(out, kNetVersion);
    const NetConfig& cfg = net.cfg;
    for (int v : {cfg.in_channels, cfg.height, cfg.width, cfg.conv_channels, cfg.fc_units,
                  cfg.actions})
        binio::write_pod<int32_t>(out, v);
    binio::write_pod<int64_t>(out, adam.step);
    auto dump = [&](const PolicyNet<float>& container) {
        container.for_each([&](const char* name, const Mat<float>& m) {
            binio::write_string(out, name);
            binio::write_pod<int32_t>(out, static_cast<int32_t>(m.rows()));
            binio::write_pod<int32_t>(out, static_cast<int32_t>(m.cols()));
            out.write(reinterpret_cast<const char*>(m.data()),
                      static_cast<std::streamsize>(sizeof(float) * m.size()));
        });
    };
    dump(net);
    dump(adam.m);
    dump(adam.v);
}

inline void load_net(std::istream& in, PolicyNet<float>& net, AdamState<float>& adam) {
    if (binio::read_pod<uint32_t>(in) != kNetMagic)
        throw ValidationError("not a network checkpoint (bad magic)");
    if (binio::read_pod<uint32_t>(in) != kNetVersion)
        throw ValidationError("unsupported checkpoint version");
    NetConfig cfg;
    cfg.in_channels = binio::read_pod<int32_t>(in);
    cfg.height = binio::read_pod<int32_t>(in);
    cfg.width = binio::read_pod<int32_t>(in);
    cfg.conv_channels = binio::read_pod<int32_t>(in);
    cfg.fc_units = binio::read_pod<int32_t>(in);
    cfg.actions = binio::read_pod<int32_t>(in);
    const int64_t step = binio::read_pod<int64_t>(in);
    net = PolicyNet<float>::zeros(cfg);
    adam = AdamState<float>::zeros(cfg);
    adam.step = step;
    auto slurp = [&](PolicyNet<float>& container) {
        container.for_each([&](const char* name, Mat<float>& m) {
            const std::string stored = binio::read_string(in);
            if (stored != name)
                throw ValidationError("checkpoint tensor order mismatch: expected " +
                                      std::string(name) + ", found " + stored);
            const int rows = binio::read_pod<int32_t>(in);
            const int cols = binio::read_pod<int32_t>(in);
            if (rows != m.rows() || cols != m.cols())
                throw ValidationError("checkpoint tensor shape mismatch for " + std::string(name));
            in.read(reinterpret_cast<char*>(m.data()),
                    static_cast<std::streamsize>(sizeof(float) * m.size()));
            if (!in)
                throw ValidationError("truncated checkpoint");
        });
    };
    slurp(net);
    slurp(adam.m);
    slurp(adam.v);
}

}  // namespace m2rl
