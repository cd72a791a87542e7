#include "engage/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

namespace engage::nn {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<RowMatrix>;
using ConstMapMatrix = Eigen::Map<const RowMatrix>;

std::string padding_name(Padding p) { return p == Padding::Same ? "same" : "valid"; }

Padding padding_from(const std::string& s) {
    if (s == "same") return Padding::Same;
    if (s == "valid") return Padding::Valid;
    throw std::invalid_argument("unknown padding: " + s);
}

void glorot_uniform(std::vector<float>& w, int fan_in, int fan_out, std::mt19937_64& rng) {
    const float limit = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
    std::uniform_real_distribution<float> dist(-limit, limit);
    for (auto& v : w) v = dist(rng);
}

void check_channels(const Shape& in, int expected, const char* layer) {
    if (in.c != expected) {
        throw std::invalid_argument(std::string(layer) + " expects " + std::to_string(expected) +
                                    " channels, got " + in.str());
    }
}

struct ConvGeometry {
    AxisGeometry y, x;
};

ConvGeometry conv_geometry(const Shape& in, int kernel, int stride, Padding padding) {
    return {axis_geometry(in.h, kernel, stride, padding), axis_geometry(in.w, kernel, stride, padding)};
}

// Unrolls one sample (C x H x W) into a (C*k*k) x (Ho*Wo) matrix.
void im2col(const float* src, int channels, int h, int w, int kernel, int stride, const ConvGeometry& g, float* col) {
    const int out_area = g.y.out * g.x.out;
    for (int c = 0; c < channels; ++c) {
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                float* row = col + (static_cast<std::size_t>((c * kernel + ky) * kernel + kx)) * out_area;
                for (int oy = 0; oy < g.y.out; ++oy) {
                    const int iy = oy * stride - g.y.pad_before + ky;
                    float* dst = row + oy * g.x.out;
                    if (iy < 0 || iy >= h) {
                        std::fill(dst, dst + g.x.out, 0.0f);
                        continue;
                    }
                    const float* line = src + (static_cast<std::size_t>(c) * h + iy) * w;
                    for (int ox = 0; ox < g.x.out; ++ox) {
                        const int ix = ox * stride - g.x.pad_before + kx;
                        dst[ox] = (ix >= 0 && ix < w) ? line[ix] : 0.0f;
                    }
                }
            }
        }
    }
}

void col2im(const float* col, int channels, int h, int w, int kernel, int stride, const ConvGeometry& g, float* dst) {
    const int out_area = g.y.out * g.x.out;
    for (int c = 0; c < channels; ++c) {
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                const float* row = col + (static_cast<std::size_t>((c * kernel + ky) * kernel + kx)) * out_area;
                for (int oy = 0; oy < g.y.out; ++oy) {
                    const int iy = oy * stride - g.y.pad_before + ky;
                    if (iy < 0 || iy >= h) continue;
                    float* line = dst + (static_cast<std::size_t>(c) * h + iy) * w;
                    for (int ox = 0; ox < g.x.out; ++ox) {
                        const int ix = ox * stride - g.x.pad_before + kx;
                        if (ix >= 0 && ix < w) line[ix] += row[oy * g.x.out + ox];
                    }
                }
            }
        }
    }
}

}  // namespace

std::string Shape::str() const {
    return "[" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + "]";
}

AxisGeometry axis_geometry(int in, int kernel, int stride, Padding padding) {
    if (padding == Padding::Valid) {
        const int out = (in - kernel) / stride + 1;
        if (out < 1) throw std::invalid_argument("input extent smaller than kernel");
        return {out, 0};
    }
    const int out = (in + stride - 1) / stride;
    const int total = std::max((out - 1) * stride + kernel - in, 0);
    return {out, total / 2};
}

// ---------------------------------------------------------------------------
// Conv2D

Conv2D::Conv2D(int in_channels, int filters, int kernel, int stride, Padding padding, bool bias)
    : in_(in_channels), filters_(filters), kernel_(kernel), stride_(stride), padding_(padding), has_bias_(bias),
      weight_("weight", static_cast<std::size_t>(filters) * in_channels * kernel * kernel),
      bias_("bias", bias ? static_cast<std::size_t>(filters) : 0) {}

Shape Conv2D::output_shape(const Shape& in) const {
    check_channels(in, in_, "conv2d");
    const auto g = conv_geometry(in, kernel_, stride_, padding_);
    return {in.n, filters_, g.y.out, g.x.out};
}

Tensor Conv2D::infer(const Tensor& x) const {
    const Shape in = x.shape();
    const Shape out_shape = output_shape(in);
    const auto g = conv_geometry(in, kernel_, stride_, padding_);
    const int patch = in_ * kernel_ * kernel_;
    const int out_area = g.y.out * g.x.out;

    Tensor out(out_shape);
    std::vector<float> col(static_cast<std::size_t>(patch) * out_area);
    const ConstMapMatrix w(weight_.value.data(), filters_, patch);
    for (int n = 0; n < in.n; ++n) {
        const float* src = x.sample(n);
        MapMatrix y(out.sample(n), filters_, out_area);
        if (kernel_ == 1 && stride_ == 1) {
            y.noalias() = w * ConstMapMatrix(src, in_, out_area);
        } else {
            im2col(src, in_, in.h, in.w, kernel_, stride_, g, col.data());
            y.noalias() = w * ConstMapMatrix(col.data(), patch, out_area);
        }
        if (has_bias_) {
            for (int f = 0; f < filters_; ++f) y.row(f).array() += bias_.value[f];
        }
    }
    return out;
}

Tensor Conv2D::forward(const Tensor& x, bool) {
    input_ = x;
    return infer(x);
}

Tensor Conv2D::backward(const Tensor& dy) {
    const Shape in = input_.shape();
    const auto g = conv_geometry(in, kernel_, stride_, padding_);
    const int patch = in_ * kernel_ * kernel_;
    const int out_area = g.y.out * g.x.out;

    Tensor dx(in);
    std::vector<float> col(static_cast<std::size_t>(patch) * out_area);
    std::vector<float> dcol(col.size());
    const ConstMapMatrix w(weight_.value.data(), filters_, patch);
    MapMatrix dw(weight_.grad.data(), filters_, patch);
    for (int n = 0; n < in.n; ++n) {
        const ConstMapMatrix g_out(dy.sample(n), filters_, out_area);
        if (has_bias_) {
            for (int f = 0; f < filters_; ++f) bias_.grad[f] += g_out.row(f).sum();
        }
        if (kernel_ == 1 && stride_ == 1) {
            dw.noalias() += g_out * ConstMapMatrix(input_.sample(n), in_, out_area).transpose();
            MapMatrix(dx.sample(n), in_, out_area).noalias() = w.transpose() * g_out;
            continue;
        }
        im2col(input_.sample(n), in_, in.h, in.w, kernel_, stride_, g, col.data());
        dw.noalias() += g_out * ConstMapMatrix(col.data(), patch, out_area).transpose();
        MapMatrix(dcol.data(), patch, out_area).noalias() = w.transpose() * g_out;
        col2im(dcol.data(), in_, in.h, in.w, kernel_, stride_, g, dx.sample(n));
    }
    return dx;
}

std::vector<Param*> Conv2D::params() {
    if (has_bias_) return {&weight_, &bias_};
    return {&weight_};
}

void Conv2D::initialize(std::mt19937_64& rng) {
    glorot_uniform(weight_.value, in_ * kernel_ * kernel_, filters_ * kernel_ * kernel_, rng);
    std::fill(bias_.value.begin(), bias_.value.end(), 0.0f);
}

nlohmann::json Conv2D::config() const {
    return {{"type", type()},       {"in", in_},         {"filters", filters_}, {"kernel", kernel_},
            {"stride", stride_},    {"padding", padding_name(padding_)},       {"bias", has_bias_}};
}

// ---------------------------------------------------------------------------
// DepthwiseConv2D

DepthwiseConv2D::DepthwiseConv2D(int channels, int kernel, int stride, Padding padding)
    : channels_(channels), kernel_(kernel), stride_(stride), padding_(padding),
      weight_("weight", static_cast<std::size_t>(channels) * kernel * kernel) {}

Shape DepthwiseConv2D::output_shape(const Shape& in) const {
    check_channels(in, channels_, "depthwise_conv2d");
    const auto g = conv_geometry(in, kernel_, stride_, padding_);
    return {in.n, channels_, g.y.out, g.x.out};
}

Tensor DepthwiseConv2D::infer(const Tensor& x) const {
    const Shape in = x.shape();
    Tensor out(output_shape(in));
    const auto g = conv_geometry(in, kernel_, stride_, padding_);
    for (int n = 0; n < in.n; ++n) {
        for (int c = 0; c < channels_; ++c) {
            const float* k = weight_.value.data() + static_cast<std::size_t>(c) * kernel_ * kernel_;
            for (int oy = 0; oy < g.y.out; ++oy) {
                for (int ox = 0; ox < g.x.out; ++ox) {
                    float acc = 0.0f;
                    for (int ky = 0; ky < kernel_; ++ky) {
                        const int iy = oy * stride_ - g.y.pad_before + ky;
                        if (iy < 0 || iy >= in.h) continue;
                        for (int kx = 0; kx < kernel_; ++kx) {
                            const int ix = ox * stride_ - g.x.pad_before + kx;
                            if (ix < 0 || ix >= in.w) continue;
                            acc += k[ky * kernel_ + kx] * x.at(n, c, iy, ix);
                        }
                    }
                    out.at(n, c, oy, ox) = acc;
                }
            }
        }
    }
    return out;
}

Tensor DepthwiseConv2D::forward(const Tensor& x, bool) {
    input_ = x;
    return infer(x);
}

Tensor DepthwiseConv2D::backward(const Tensor& dy) {
    const Shape in = input_.shape();
    const auto g = conv_geometry(in, kernel_, stride_, padding_);
    Tensor dx(in);
    for (int n = 0; n < in.n; ++n) {
        for (int c = 0; c < channels_; ++c) {
            const float* k = weight_.value.data() + static_cast<std::size_t>(c) * kernel_ * kernel_;
            float* dk = weight_.grad.data() + static_cast<std::size_t>(c) * kernel_ * kernel_;
            for (int oy = 0; oy < g.y.out; ++oy) {
                for (int ox = 0; ox < g.x.out; ++ox) {
                    const float go = dy.at(n, c, oy, ox);
                    for (int ky = 0; ky < kernel_; ++ky) {
                        const int iy = oy * stride_ - g.y.pad_before + ky;
                        if (iy < 0 || iy >= in.h) continue;
                        for (int kx = 0; kx < kernel_; ++kx) {
                            const int ix = ox * stride_ - g.x.pad_before + kx;
                            if (ix < 0 || ix >= in.w) continue;
                            dk[ky * kernel_ + kx] += go * input_.at(n, c, iy, ix);
                            dx.at(n, c, iy, ix) += go * k[ky * kernel_ + kx];
                        }
                    }
                }
            }
        }
    }
    return dx;
}

void DepthwiseConv2D::initialize(std::mt19937_64& rng) {
    glorot_uniform(weight_.value, kernel_ * kernel_, kernel_ * kernel_, rng);
}

nlohmann::json DepthwiseConv2D::config() const {
    return {{"type", type()}, {"channels", channels_}, {"kernel", kernel_}, {"stride", stride_},
            {"padding", padding_name(padding_)}};
}

// ---------------------------------------------------------------------------
// BatchNorm

BatchNorm::BatchNorm(int channels, float momentum, float epsilon)
    : channels_(channels), momentum_(momentum), epsilon_(epsilon), gamma_("gamma", channels), beta_("beta", channels),
      running_mean_(channels, 0.0f), running_var_(channels, 1.0f) {
    std::fill(gamma_.value.begin(), gamma_.value.end(), 1.0f);
}

void BatchNorm::initialize(std::mt19937_64&) {
    std::fill(gamma_.value.begin(), gamma_.value.end(), 1.0f);
    std::fill(beta_.value.begin(), beta_.value.end(), 0.0f);
    std::fill(running_mean_.begin(), running_mean_.end(), 0.0f);
    std::fill(running_var_.begin(), running_var_.end(), 1.0f);
}

Tensor BatchNorm::infer(const Tensor& x) const {
    const Shape s = x.shape();
    check_channels(s, channels_, "batch_norm");
    Tensor out(s);
    const int area = s.h * s.w;
    for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < channels_; ++c) {
            const float scale = gamma_.value[c] / std::sqrt(running_var_[c] + epsilon_);
            const float shift = beta_.value[c] - running_mean_[c] * scale;
            const float* src = x.sample(n) + static_cast<std::size_t>(c) * area;
            float* dst = out.sample(n) + static_cast<std::size_t>(c) * area;
            for (int i = 0; i < area; ++i) dst[i] = src[i] * scale + shift;
        }
    }
    return out;
}

Tensor BatchNorm::forward(const Tensor& x, bool training) {
    cached_training_ = training;
    if (!training) return infer(x);

    const Shape s = x.shape();
    check_channels(s, channels_, "batch_norm");
    const int area = s.h * s.w;
    const double count = static_cast<double>(s.n) * area;
    Tensor out(s);
    normalized_ = Tensor(s);
    inv_std_.assign(channels_, 0.0f);
    for (int c = 0; c < channels_; ++c) {
        double sum = 0.0;
        double sq = 0.0;
        for (int n = 0; n < s.n; ++n) {
            const float* src = x.sample(n) + static_cast<std::size_t>(c) * area;
            for (int i = 0; i < area; ++i) {
                sum += src[i];
                sq += static_cast<double>(src[i]) * src[i];
            }
        }
        const double mean = sum / count;
        const double var = std::max(0.0, sq / count - mean * mean);
        const float inv = static_cast<float>(1.0 / std::sqrt(var + epsilon_));
        inv_std_[c] = inv;
        running_mean_[c] = momentum_ * running_mean_[c] + (1.0f - momentum_) * static_cast<float>(mean);
        running_var_[c] = momentum_ * running_var_[c] + (1.0f - momentum_) * static_cast<float>(var);
        for (int n = 0; n < s.n; ++n) {
            const float* src = x.sample(n) + static_cast<std::size_t>(c) * area;
            float* xn = normalized_.sample(n) + static_cast<std::size_t>(c) * area;
            float* dst = out.sample(n) + static_cast<std::size_t>(c) * area;
            for (int i = 0; i < area; ++i) {
                xn[i] = (src[i] - static_cast<float>(mean)) * inv;
                dst[i] = xn[i] * gamma_.value[c] + beta_.value[c];
            }
        }
    }
    return out;
}

Tensor BatchNorm::backward(const Tensor& dy) {
    const Shape s = dy.shape();
    const int area = s.h * s.w;
    Tensor dx(s);
    if (!cached_training_) {
        for (int c = 0; c < channels_; ++c) {
            const float scale = gamma_.value[c] / std::sqrt(running_var_[c] + epsilon_);
            for (int n = 0; n < s.n; ++n) {
                const float* g = dy.sample(n) + static_cast<std::size_t>(c) * area;
                float* d = dx.sample(n) + static_cast<std::size_t>(c) * area;
                for (int i = 0; i < area; ++i) d[i] = g[i] * scale;
            }
        }
        return dx;
    }
    const float count = static_cast<float>(s.n) * area;
    for (int c = 0; c < channels_; ++c) {
        double sum_g = 0.0;
        double sum_gx = 0.0;
        for (int n = 0; n < s.n; ++n) {
            const float* g = dy.sample(n) + static_cast<std::size_t>(c) * area;
            const float* xn = normalized_.sample(n) + static_cast<std::size_t>(c) * area;
            for (int i = 0; i < area; ++i) {
                sum_g += g[i];
                sum_gx += static_cast<double>(g[i]) * xn[i];
            }
        }
        gamma_.grad[c] += static_cast<float>(sum_gx);
        beta_.grad[c] += static_cast<float>(sum_g);
        const float k = gamma_.value[c] * inv_std_[c] / count;
        for (int n = 0; n < s.n; ++n) {
            const float* g = dy.sample(n) + static_cast<std::size_t>(c) * area;
            const float* xn = normalized_.sample(n) + static_cast<std::size_t>(c) * area;
            float* d = dx.sample(n) + static_cast<std::size_t>(c) * area;
            for (int i = 0; i < area; ++i) {
                d[i] = k * (count * g[i] - static_cast<float>(sum_g) - xn[i] * static_cast<float>(sum_gx));
            }
        }
    }
    return dx;
}

nlohmann::json BatchNorm::config() const {
    return {{"type", type()}, {"channels", channels_}, {"momentum", momentum_}, {"epsilon", epsilon_}};
}

// ---------------------------------------------------------------------------
// ReLU

Tensor ReLU::infer(const Tensor& x) const {
    Tensor out = x;
    for (auto& v : out.vec()) v = std::max(v, 0.0f);
    return out;
}

Tensor ReLU::forward(const Tensor& x, bool) {
    output_ = infer(x);
    return output_;
}

Tensor ReLU::backward(const Tensor& dy) {
    Tensor dx = dy;
    const auto& y = output_.vec();
    auto& d = dx.vec();
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (y[i] <= 0.0f) d[i] = 0.0f;
    }
    return dx;
}

// ---------------------------------------------------------------------------
// MaxPool2D

MaxPool2D::MaxPool2D(int kernel, int stride, Padding padding) : kernel_(kernel), stride_(stride), padding_(padding) {}

Shape MaxPool2D::output_shape(const Shape& in) const {
    const auto g = conv_geometry(in, kernel_, stride_, padding_);
    return {in.n, in.c, g.y.out, g.x.out};
}

Tensor MaxPool2D::pool(const Tensor& x, std::vector<std::size_t>* argmax) const {
    const Shape in = x.shape();
    const auto g = conv_geometry(in, kernel_, stride_, padding_);
    Tensor out(output_shape(in));
    if (argmax) argmax->assign(out.size(), 0);
    std::size_t o = 0;
    for (int n = 0; n < in.n; ++n) {
        for (int c = 0; c < in.c; ++c) {
            for (int oy = 0; oy < g.y.out; ++oy) {
                for (int ox = 0; ox < g.x.out; ++ox, ++o) {
                    float best = -std::numeric_limits<float>::infinity();
                    std::size_t best_idx = 0;
                    for (int ky = 0; ky < kernel_; ++ky) {
                        const int iy = oy * stride_ - g.y.pad_before + ky;
                        if (iy < 0 || iy >= in.h) continue;
                        for (int kx = 0; kx < kernel_; ++kx) {
                            const int ix = ox * stride_ - g.x.pad_before + kx;
                            if (ix < 0 || ix >= in.w) continue;
                            const std::size_t idx = ((static_cast<std::size_t>(n) * in.c + c) * in.h + iy) * in.w + ix;
                            if (x.vec()[idx] > best) {
                                best = x.vec()[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    out.vec()[o] = best;
                    if (argmax) (*argmax)[o] = best_idx;
                }
            }
        }
    }
    return out;
}

Tensor MaxPool2D::infer(const Tensor& x) const { return pool(x, nullptr); }

Tensor MaxPool2D::forward(const Tensor& x, bool) {
    in_shape_ = x.shape();
    return pool(x, &argmax_);
}

Tensor MaxPool2D::backward(const Tensor& dy) {
    Tensor dx(in_shape_);
    for (std::size_t i = 0; i < dy.size(); ++i) dx.vec()[argmax_[i]] += dy.vec()[i];
    return dx;
}

nlohmann::json MaxPool2D::config() const {
    return {{"type", type()}, {"kernel", kernel_}, {"stride", stride_}, {"padding", padding_name(padding_)}};
}

// ---------------------------------------------------------------------------
// GlobalAvgPool / Flatten

Tensor GlobalAvgPool::infer(const Tensor& x) const {
    const Shape s = x.shape();
    Tensor out({s.n, s.c, 1, 1});
    const int area = s.h * s.w;
    for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
            const float* src = x.sample(n) + static_cast<std::size_t>(c) * area;
            double sum = 0.0;
            for (int i = 0; i < area; ++i) sum += src[i];
            out.at(n, c, 0, 0) = static_cast<float>(sum / area);
        }
    }
    return out;
}

Tensor GlobalAvgPool::forward(const Tensor& x, bool) {
    in_shape_ = x.shape();
    return infer(x);
}

Tensor GlobalAvgPool::backward(const Tensor& dy) {
    Tensor dx(in_shape_);
    const int area = in_shape_.h * in_shape_.w;
    for (int n = 0; n < in_shape_.n; ++n) {
        for (int c = 0; c < in_shape_.c; ++c) {
            const float g = dy.at(n, c, 0, 0) / static_cast<float>(area);
            float* d = dx.sample(n) + static_cast<std::size_t>(c) * area;
            std::fill(d, d + area, g);
        }
    }
    return dx;
}

Tensor Flatten::infer(const Tensor& x) const { return x.reshaped(output_shape(x.shape())); }

Tensor Flatten::forward(const Tensor& x, bool) {
    in_shape_ = x.shape();
    return infer(x);
}

Tensor Flatten::backward(const Tensor& dy) { return dy.reshaped(in_shape_); }

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(int in_features, int out_features)
    : in_(in_features), out_(out_features), weight_("weight", static_cast<std::size_t>(in_features) * out_features),
      bias_("bias", out_features) {}

Shape Dense::output_shape(const Shape& in) const {
    if (in.per_sample() != static_cast<std::size_t>(in_)) {
        throw std::invalid_argument("dense expects " + std::to_string(in_) + " features, got " + in.str());
    }
    return {in.n, out_, 1, 1};
}

Tensor Dense::infer(const Tensor& x) const {
    const Shape out_shape = output_shape(x.shape());
    Tensor out(out_shape);
    const ConstMapMatrix w(weight_.value.data(), out_, in_);
    const ConstMapMatrix in(x.data(), x.shape().n, in_);
    MapMatrix y(out.data(), x.shape().n, out_);
    y.noalias() = in * w.transpose();
    for (int n = 0; n < x.shape().n; ++n) {
        for (int o = 0; o < out_; ++o) y(n, o) += bias_.value[o];
    }
    return out;
}

Tensor Dense::forward(const Tensor& x, bool) {
    input_ = x;
    return infer(x);
}

Tensor Dense::backward(const Tensor& dy) {
    const int batch = input_.shape().n;
    const ConstMapMatrix g(dy.data(), batch, out_);
    const ConstMapMatrix in(input_.data(), batch, in_);
    const ConstMapMatrix w(weight_.value.data(), out_, in_);
    MapMatrix(weight_.grad.data(), out_, in_).noalias() += g.transpose() * in;
    for (int n = 0; n < batch; ++n) {
        for (int o = 0; o < out_; ++o) bias_.grad[o] += g(n, o);
    }
    Tensor dx(input_.shape());
    MapMatrix(dx.data(), batch, in_).noalias() = g * w;
    return dx;
}

void Dense::initialize(std::mt19937_64& rng) {
    glorot_uniform(weight_.value, in_, out_, rng);
    std::fill(bias_.value.begin(), bias_.value.end(), 0.0f);
}

nlohmann::json Dense::config() const { return {{"type", type()}, {"in", in_}, {"out", out_}}; }

// ---------------------------------------------------------------------------
// Sequential / Residual

Shape Sequential::output_shape(const Shape& in) const {
    Shape s = in;
    for (const auto& l : layers_) s = l->output_shape(s);
    return s;
}

Tensor Sequential::forward(const Tensor& x, bool training) {
    Tensor cur = x;
    for (auto& l : layers_) cur = l->forward(cur, training);
    return cur;
}

Tensor Sequential::infer(const Tensor& x) const {
    Tensor cur = x;
    for (const auto& l : layers_) cur = l->infer(cur);
    return cur;
}

Tensor Sequential::backward(const Tensor& dy) {
    Tensor cur = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
    return cur;
}

std::vector<Param*> Sequential::params() {
    std::vector<Param*> out;
    for (auto& l : layers_) {
        auto p = l->params();
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

std::vector<std::vector<float>*> Sequential::buffers() {
    std::vector<std::vector<float>*> out;
    for (auto& l : layers_) {
        auto b = l->buffers();
        out.insert(out.end(), b.begin(), b.end());
    }
    return out;
}

void Sequential::initialize(std::mt19937_64& rng) {
    for (auto& l : layers_) l->initialize(rng);
}

nlohmann::json Sequential::config() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : layers_) layers.push_back(l->config());
    return {{"type", type()}, {"layers", layers}};
}

Shape Residual::output_shape(const Shape& in) const {
    const Shape a = main_.output_shape(in);
    const Shape b = shortcut_.output_shape(in);
    if (!(a == b)) throw std::invalid_argument("residual branches disagree: " + a.str() + " vs " + b.str());
    return a;
}

Tensor Residual::forward(const Tensor& x, bool training) {
    Tensor y = main_.forward(x, training);
    const Tensor s = shortcut_.forward(x, training);
    for (std::size_t i = 0; i < y.size(); ++i) y.vec()[i] += s.vec()[i];
    return y;
}

Tensor Residual::infer(const Tensor& x) const {
    Tensor y = main_.infer(x);
    const Tensor s = shortcut_.infer(x);
    for (std::size_t i = 0; i < y.size(); ++i) y.vec()[i] += s.vec()[i];
    return y;
}

Tensor Residual::backward(const Tensor& dy) {
    Tensor dx = main_.backward(dy);
    const Tensor ds = shortcut_.backward(dy);
    for (std::size_t i = 0; i < dx.size(); ++i) dx.vec()[i] += ds.vec()[i];
    return dx;
}

std::vector<Param*> Residual::params() {
    auto out = main_.params();
    auto s = shortcut_.params();
    out.insert(out.end(), s.begin(), s.end());
    return out;
}

std::vector<std::vector<float>*> Residual::buffers() {
    auto out = main_.buffers();
    auto s = shortcut_.buffers();
    out.insert(out.end(), s.begin(), s.end());
    return out;
}

void Residual::initialize(std::mt19937_64& rng) {
    main_.initialize(rng);
    shortcut_.initialize(rng);
}

nlohmann::json Residual::config() const {
    return {{"type", type()}, {"main", main_.config()}, {"shortcut", shortcut_.config()}};
}

// ---------------------------------------------------------------------------

namespace {

Sequential sequential_from(const nlohmann::json& cfg) {
    Sequential seq;
    for (const auto& l : cfg.at("layers")) seq.add(layer_from_config(l));
    return seq;
}

}  // namespace

LayerPtr layer_from_config(const nlohmann::json& cfg) {
    const std::string type = cfg.at("type").get<std::string>();
    if (type == "conv2d") {
        return std::make_unique<Conv2D>(cfg.at("in").get<int>(), cfg.at("filters").get<int>(), cfg.at("kernel").get<int>(),
                                        cfg.at("stride").get<int>(), padding_from(cfg.at("padding").get<std::string>()),
                                        cfg.at("bias").get<bool>());
    }
    if (type == "depthwise_conv2d") {
        return std::make_unique<DepthwiseConv2D>(cfg.at("channels").get<int>(), cfg.at("kernel").get<int>(),
                                                 cfg.at("stride").get<int>(),
                                                 padding_from(cfg.at("padding").get<std::string>()));
    }
    if (type == "batch_norm") {
        return std::make_unique<BatchNorm>(cfg.at("channels").get<int>(), cfg.at("momentum").get<float>(),
                                           cfg.at("epsilon").get<float>());
    }
    if (type == "relu") return std::make_unique<ReLU>();
    if (type == "max_pool2d") {
        return std::make_unique<MaxPool2D>(cfg.at("kernel").get<int>(), cfg.at("stride").get<int>(),
                                           padding_from(cfg.at("padding").get<std::string>()));
    }
    if (type == "global_avg_pool") return std::make_unique<GlobalAvgPool>();
    if (type == "flatten") return std::make_unique<Flatten>();
    if (type == "dense") return std::make_unique<Dense>(cfg.at("in").get<int>(), cfg.at("out").get<int>());
    if (type == "sequential") return std::make_unique<Sequential>(sequential_from(cfg));
    if (type == "residual") {
        return std::make_unique<Residual>(sequential_from(cfg.at("main")), sequential_from(cfg.at("shortcut")));
    }
    throw std::invalid_argument("unknown layer type: " + type);
}

}  // namespace engage::nn
