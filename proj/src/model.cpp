#include "als/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "als/error.hpp"
#include "als/format.hpp"
#include "als/loss.hpp"
#include "als/rng.hpp"

namespace als {

namespace {

constexpr float kInputCenter = 0.5f;

// Fixed 8-lane dot product. The lane split is part of the summation order,
// so results are identical on every run while still vectorizing.
template <typename Real>
Real dot(const Real* a, const Real* b, std::size_t n) {
  Real lanes[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (std::size_t l = 0; l < 8; ++l) lanes[l] += a[i + l] * b[i + l];
  for (std::size_t l = 0; i < n; ++i, ++l) lanes[l] += a[i] * b[i];
  return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
}

// Column buffer: row r = (ci, ky, kx) holds the input shifted by that tap,
// zero where the tap falls outside the image (same padding).
template <typename Real>
void im2col(const Real* in, int c_in, int w, int h, int k, Real* cols) {
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(w) * h;
  std::fill(cols, cols + hw * c_in * k * k, Real(0));
  for (int ci = 0; ci < c_in; ++ci) {
    const Real* plane = in + ci * hw;
    for (int ky = 0; ky < k; ++ky) {
      const int dy = ky - pad;
      const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
      for (int kx = 0; kx < k; ++kx) {
        const int dx = kx - pad;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        Real* row = cols + static_cast<std::size_t>((ci * k + ky) * k + kx) * hw;
        for (int y = y0; y < y1; ++y) {
          Real* dst = row + static_cast<std::size_t>(y) * w;
          const Real* src = plane + static_cast<std::size_t>(y + dy) * w + dx;
          for (int x = x0; x < x1; ++x) dst[x] = src[x];
        }
      }
    }
  }
}

template <typename Real>
void col2im(const Real* cols, int c_in, int w, int h, int k, Real* d_in) {
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(w) * h;
  std::fill(d_in, d_in + hw * c_in, Real(0));
  for (int ci = 0; ci < c_in; ++ci) {
    Real* plane = d_in + ci * hw;
    for (int ky = 0; ky < k; ++ky) {
      const int dy = ky - pad;
      const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
      for (int kx = 0; kx < k; ++kx) {
        const int dx = kx - pad;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        const Real* row = cols + static_cast<std::size_t>((ci * k + ky) * k + kx) * hw;
        for (int y = y0; y < y1; ++y) {
          const Real* src = row + static_cast<std::size_t>(y) * w;
          Real* dst = plane + static_cast<std::size_t>(y + dy) * w + dx;
          for (int x = x0; x < x1; ++x) dst[x] += src[x];
        }
      }
    }
  }
}

template <typename Real>
void conv_forward(const Real* cols, std::size_t rows, std::size_t hw, const Real* weight, const Real* bias,
                  int c_out, Real* out) {
  for (int co = 0; co < c_out; ++co) {
    Real* o = out + co * hw;
    std::fill(o, o + hw, bias[co]);
    const Real* wrow = weight + co * rows;
    for (std::size_t r = 0; r < rows; ++r) {
      const Real wv = wrow[r];
      const Real* c = cols + r * hw;
      for (std::size_t i = 0; i < hw; ++i) o[i] += wv * c[i];
    }
  }
}

// d_out is d loss / d conv output. Accumulates weight and bias gradients and,
// when d_cols is non-null, writes d loss / d column buffer.
template <typename Real>
void conv_backward(const Real* cols, std::size_t rows, std::size_t hw, const Real* weight, int c_out,
                   const Real* d_out, Real* d_weight, Real* d_bias, Real* d_cols) {
  const std::vector<Real> ones(hw, Real(1));
  if (d_cols) std::fill(d_cols, d_cols + rows * hw, Real(0));
  for (int co = 0; co < c_out; ++co) {
    const Real* g = d_out + co * hw;
    d_bias[co] += dot(g, ones.data(), hw);
    const Real* wrow = weight + co * rows;
    Real* dwrow = d_weight + co * rows;
    for (std::size_t r = 0; r < rows; ++r) {
      dwrow[r] += dot(g, cols + r * hw, hw);
      if (d_cols) {
        const Real wv = wrow[r];
        Real* dc = d_cols + r * hw;
        for (std::size_t i = 0; i < hw; ++i) dc[i] += wv * g[i];
      }
    }
  }
}

template <typename Real>
void relu_pool_forward(const Real* conv, int c, int w, int h, Real* pooled, std::uint32_t* arg) {
  const int pw = w / 2, ph = h / 2;
  const std::size_t hw = static_cast<std::size_t>(w) * h;
  for (int ch = 0; ch < c; ++ch) {
    const Real* plane = conv + ch * hw;
    for (int py = 0; py < ph; ++py) {
      for (int px = 0; px < pw; ++px) {
        std::uint32_t best = static_cast<std::uint32_t>((2 * py) * w + 2 * px);
        for (int oy = 0; oy < 2; ++oy)
          for (int ox = 0; ox < 2; ++ox) {
            const auto idx = static_cast<std::uint32_t>((2 * py + oy) * w + 2 * px + ox);
            if (plane[idx] > plane[best]) best = idx;
          }
        const std::size_t o = static_cast<std::size_t>(ch) * pw * ph + static_cast<std::size_t>(py) * pw + px;
        pooled[o] = std::max(plane[best], Real(0));
        arg[o] = best;
      }
    }
  }
}

std::string shape_error(std::size_t got, std::size_t want) {
  return "input has " + std::to_string(got) + " pixels, network expects " + std::to_string(want);
}

}  // namespace

void NetConfig::validate() const {
  if (in_w <= 0 || in_h <= 0) throw InvalidInput("network input size must be positive");
  if (channels.empty()) throw InvalidInput("network needs at least one conv stage");
  for (int c : channels)
    if (c <= 0) throw InvalidInput("conv channel counts must be positive");
  if (kernel <= 0 || kernel % 2 == 0) throw InvalidInput("conv kernel must be odd and positive");
  if (hidden <= 0) throw InvalidInput("hidden width must be positive");
  if (num_classes < 2) throw InvalidInput("network needs at least 2 outputs");
  int w = in_w, h = in_h;
  for (std::size_t s = 0; s < channels.size(); ++s) {
    w /= 2;
    h /= 2;
  }
  if (w < 1 || h < 1) throw InvalidInput("input too small for the number of pooling stages");
}

ConvNet::ConvNet(NetConfig config) : config_(std::move(config)) {
  config_.validate();
  std::size_t off = 0;
  auto add = [&](std::string name, std::size_t n) {
    slots_.push_back({std::move(name), off, n});
    off += n;
    return off - n;
  };
  int c_in = 1, w = config_.in_w, h = config_.in_h;
  const auto kk = static_cast<std::size_t>(config_.kernel) * config_.kernel;
  for (std::size_t s = 0; s < config_.channels.size(); ++s) {
    const int c_out = config_.channels[s];
    Stage st{c_in, c_out, w, h, 0, 0};
    st.weight = add("conv" + std::to_string(s + 1) + ".weight", static_cast<std::size_t>(c_out) * c_in * kk);
    st.bias = add("conv" + std::to_string(s + 1) + ".bias", static_cast<std::size_t>(c_out));
    stages_.push_back(st);
    c_in = c_out;
    w /= 2;
    h /= 2;
  }
  flat_ = static_cast<std::size_t>(c_in) * w * h;
  const auto hidden = static_cast<std::size_t>(config_.hidden);
  const auto k = static_cast<std::size_t>(config_.num_classes);
  dense1_w_ = add("dense1.weight", hidden * flat_);
  dense1_b_ = add("dense1.bias", hidden);
  dense2_w_ = add("dense2.weight", k * hidden);
  dense2_b_ = add("dense2.bias", k);
  param_count_ = off;
}

std::vector<float> ConvNet::initial_parameters() const {
  std::vector<float> p(param_count_, 0.0f);
  Rng rng(derive_seed({config_.seed, salt::kInit}));
  const auto kk = static_cast<double>(config_.kernel * config_.kernel);
  for (const Stage& st : stages_) {
    const double std_dev = std::sqrt(2.0 / (st.c_in * kk));
    const std::size_t n = static_cast<std::size_t>(st.c_out) * st.c_in * config_.kernel * config_.kernel;
    for (std::size_t i = 0; i < n; ++i) p[st.weight + i] = static_cast<float>(std_dev * rng.normal());
  }
  const double std_dev = std::sqrt(2.0 / static_cast<double>(flat_));
  for (std::size_t i = 0; i < flat_ * config_.hidden; ++i)
    p[dense1_w_ + i] = static_cast<float>(std_dev * rng.normal());
  return p;
}

template <typename Real>
void ConvNet::forward(std::span<const Real> params, std::span<const Real> input, Workspace<Real>& ws) const {
  if (params.size() != param_count_) throw InvalidInput("parameter vector has the wrong length");
  if (input.size() != input_size()) throw InvalidInput(shape_error(input.size(), input_size()));
  const std::size_t n_stages = stages_.size();
  ws.stage_in.resize(n_stages);
  ws.conv_out.resize(n_stages);
  ws.pooled.resize(n_stages);
  ws.pool_arg.resize(n_stages);
  ws.cols.resize(n_stages);

  ws.stage_in[0].resize(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) ws.stage_in[0][i] = input[i] - Real(kInputCenter);

  const Real* p = params.data();
  for (std::size_t s = 0; s < n_stages; ++s) {
    const Stage& st = stages_[s];
    if (s > 0) ws.stage_in[s] = ws.pooled[s - 1];
    const std::size_t hw = static_cast<std::size_t>(st.w) * st.h;
    const std::size_t rows = static_cast<std::size_t>(st.c_in) * config_.kernel * config_.kernel;
    ws.cols[s].resize(rows * hw);
    im2col(ws.stage_in[s].data(), st.c_in, st.w, st.h, config_.kernel, ws.cols[s].data());
    ws.conv_out[s].resize(hw * st.c_out);
    conv_forward(ws.cols[s].data(), rows, hw, p + st.weight, p + st.bias, st.c_out, ws.conv_out[s].data());
    const std::size_t pooled = static_cast<std::size_t>(st.w / 2) * (st.h / 2) * st.c_out;
    ws.pooled[s].resize(pooled);
    ws.pool_arg[s].resize(pooled);
    relu_pool_forward(ws.conv_out[s].data(), st.c_out, st.w, st.h, ws.pooled[s].data(), ws.pool_arg[s].data());
  }

  const std::vector<Real>& flat = ws.pooled.back();
  const auto hidden = static_cast<std::size_t>(config_.hidden);
  ws.hidden_pre.resize(hidden);
  ws.hidden_act.resize(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    const Real* row = p + dense1_w_ + j * flat_;
    ws.hidden_pre[j] = dot(row, flat.data(), flat_) + p[dense1_b_ + j];
    ws.hidden_act[j] = std::max(ws.hidden_pre[j], Real(0));
  }
  const auto k = static_cast<std::size_t>(config_.num_classes);
  ws.logits.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    const Real* row = p + dense2_w_ + c * hidden;
    ws.logits[c] = dot(row, ws.hidden_act.data(), hidden) + p[dense2_b_ + c];
  }
}

template <typename Real>
void ConvNet::backward_impl(std::span<const Real> params, std::span<const Real> d_logits, Workspace<Real>& ws,
                            std::span<Real> grad, bool want_input, std::vector<Real>* d_input) const {
  if (grad.size() != param_count_) throw InvalidInput("gradient vector has the wrong length");
  const auto k = static_cast<std::size_t>(config_.num_classes);
  if (d_logits.size() != k) throw InvalidInput("logit gradient has the wrong length");
  const Real* p = params.data();
  Real* g = grad.data();
  const auto hidden = static_cast<std::size_t>(config_.hidden);

  std::vector<Real>& d_hidden = ws.d_a;
  d_hidden.assign(hidden, Real(0));
  for (std::size_t c = 0; c < k; ++c) {
    const Real dl = d_logits[c];
    g[dense2_b_ + c] += dl;
    Real* grow = g + dense2_w_ + c * hidden;
    const Real* row = p + dense2_w_ + c * hidden;
    for (std::size_t j = 0; j < hidden; ++j) {
      grow[j] += dl * ws.hidden_act[j];
      d_hidden[j] += row[j] * dl;
    }
  }
  for (std::size_t j = 0; j < hidden; ++j)
    if (!(ws.hidden_pre[j] > Real(0))) d_hidden[j] = 0;

  const std::vector<Real>& flat = ws.pooled.back();
  std::vector<Real>& d_pooled = ws.d_b;
  d_pooled.assign(flat_, Real(0));
  for (std::size_t j = 0; j < hidden; ++j) {
    const Real dh = d_hidden[j];
    g[dense1_b_ + j] += dh;
    if (dh == Real(0)) continue;
    Real* grow = g + dense1_w_ + j * flat_;
    const Real* row = p + dense1_w_ + j * flat_;
    for (std::size_t i = 0; i < flat_; ++i) {
      grow[i] += dh * flat[i];
      d_pooled[i] += row[i] * dh;
    }
  }

  std::vector<Real> d_conv;
  std::vector<Real> d_cols;
  std::vector<Real> d_in;
  for (std::size_t s = stages_.size(); s-- > 0;) {
    const Stage& st = stages_[s];
    const std::size_t hw = static_cast<std::size_t>(st.w) * st.h;
    d_conv.assign(hw * st.c_out, Real(0));
    const std::size_t per_channel = static_cast<std::size_t>(st.w / 2) * (st.h / 2);
    for (std::size_t o = 0; o < d_pooled.size(); ++o) {
      const std::size_t ch = o / per_channel;
      const std::size_t idx = ch * hw + ws.pool_arg[s][o];
      if (ws.conv_out[s][idx] > Real(0)) d_conv[idx] += d_pooled[o];
    }
    const bool need_in = s > 0 || want_input;
    const std::size_t rows = static_cast<std::size_t>(st.c_in) * config_.kernel * config_.kernel;
    d_cols.resize(need_in ? rows * hw : 0);
    conv_backward(ws.cols[s].data(), rows, hw, p + st.weight, st.c_out, d_conv.data(), g + st.weight,
                  g + st.bias, need_in ? d_cols.data() : nullptr);
    if (need_in) {
      d_in.resize(hw * st.c_in);
      col2im(d_cols.data(), st.c_in, st.w, st.h, config_.kernel, d_in.data());
      d_pooled.swap(d_in);
    }
  }
  if (want_input && d_input) *d_input = d_pooled;
}

template <typename Real>
void ConvNet::backward(std::span<const Real> params, std::span<const Real> d_logits, Workspace<Real>& ws,
                       std::span<Real> grad) const {
  backward_impl<Real>(params, d_logits, ws, grad, false, nullptr);
}

template <typename Real>
std::vector<Real> ConvNet::input_gradient(std::span<const Real> params, std::span<const Real> d_logits,
                                          Workspace<Real>& ws) const {
  std::vector<Real> scratch(param_count_, Real(0));
  std::vector<Real> d_input;
  backward_impl(params, d_logits, ws, std::span<Real>(scratch), true, &d_input);
  return d_input;
}

template void ConvNet::forward<float>(std::span<const float>, std::span<const float>, Workspace<float>&) const;
template void ConvNet::forward<double>(std::span<const double>, std::span<const double>,
                                       Workspace<double>&) const;
template void ConvNet::backward<float>(std::span<const float>, std::span<const float>, Workspace<float>&,
                                       std::span<float>) const;
template void ConvNet::backward<double>(std::span<const double>, std::span<const double>, Workspace<double>&,
                                        std::span<double>) const;
template std::vector<float> ConvNet::input_gradient<float>(std::span<const float>, std::span<const float>,
                                                           Workspace<float>&) const;
template std::vector<double> ConvNet::input_gradient<double>(std::span<const double>, std::span<const double>,
                                                             Workspace<double>&) const;

ModelState ModelState::initialize(const NetConfig& config) {
  ConvNet net(config);
  ModelState s;
  s.config = config;
  s.params = net.initial_parameters();
  s.momentum.assign(s.params.size(), 0.0f);
  return s;
}

namespace {

void check_state(const ConvNet& net, const ModelState& state) {
  if (state.params.size() != net.parameter_count())
    throw InvalidInput("model state does not match its network config");
}

void check_image(const ConvNet& net, const Raster& image) {
  if (image.width != net.config().in_w || image.height != net.config().in_h) {
    throw InvalidInput("image is " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                       ", network expects " + std::to_string(net.config().in_w) + "x" +
                       std::to_string(net.config().in_h));
  }
}

std::vector<double> to_double(std::span<const float> v) { return {v.begin(), v.end()}; }

}  // namespace

std::vector<std::vector<double>> forward(const ModelState& state, std::span<const Raster> batch) {
  const ConvNet net(state.config);
  check_state(net, state);
  ConvNet::Workspace<float> ws;
  std::vector<std::vector<double>> out;
  out.reserve(batch.size());
  for (const Raster& image : batch) {
    check_image(net, image);
    net.forward<float>(state.params, image.pixels, ws);
    out.push_back(to_double(ws.logits));
  }
  return out;
}

PredictionRecord predict(const ModelState& state, const Raster& image, int true_class,
                         std::optional<double> objectness, std::int64_t id) {
  const auto logits = forward(state, std::span<const Raster>(&image, 1));
  return make_record(id, softmax(logits.front()), true_class, objectness);
}

StepResult train_step(ModelState& state, std::span<const Raster> batch, std::span<const LabelVector> labels,
                      double lr, double momentum, int workers, std::int64_t step) {
  const ConvNet net(state.config);
  check_state(net, state);
  if (batch.empty()) throw InvalidInput("empty training batch");
  if (batch.size() != labels.size()) throw InvalidInput("batch and label counts differ");
  for (std::size_t i = 0; i < batch.size(); ++i) {
    check_image(net, batch[i]);
    if (labels[i].size() != static_cast<std::size_t>(state.config.num_classes))
      throw InvalidInput("label length does not match the number of classes");
  }
  if (state.momentum.size() != state.params.size()) state.momentum.assign(state.params.size(), 0.0f);

  const std::size_t n = batch.size();
  const std::size_t p_count = net.parameter_count();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> losses(n, 0.0);
  std::vector<char> finite(n, 1);

  // Per-sample gradient into a zeroed buffer, then summed in sample order; the
  // worker count therefore never changes the result.
  auto sample_grad = [&](std::size_t i, ConvNet::Workspace<float>& ws, std::vector<float>& g) {
    net.forward<float>(state.params, batch[i].pixels, ws);
    const std::vector<double> logits = to_double(ws.logits);
    for (double z : logits)
      if (!std::isfinite(z)) finite[i] = 0;
    std::fill(g.begin(), g.end(), 0.0f);
    if (!finite[i]) return;
    losses[i] = cross_entropy(logits, labels[i]);
    const std::vector<double> dz = grad_logits(logits, labels[i]);
    std::vector<float> dzf(dz.size());
    for (std::size_t c = 0; c < dz.size(); ++c) dzf[c] = static_cast<float>(dz[c] * inv_n);
    net.backward<float>(state.params, dzf, ws, g);
  };

  std::vector<float> total(p_count, 0.0f);
  const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (n_workers == 1) {
    ConvNet::Workspace<float> ws;
    std::vector<float> g(p_count);
    for (std::size_t i = 0; i < n; ++i) {
      sample_grad(i, ws, g);
      for (std::size_t j = 0; j < p_count; ++j) total[j] += g[j];
    }
  } else {
    std::vector<std::vector<float>> grads(n, std::vector<float>(p_count));
    {
      std::vector<std::jthread> pool;
      for (int w = 0; w < n_workers; ++w) {
        pool.emplace_back([&, w] {
          ConvNet::Workspace<float> ws;
          for (std::size_t i = static_cast<std::size_t>(w); i < n; i += static_cast<std::size_t>(n_workers))
            sample_grad(i, ws, grads[i]);
        });
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p_count; ++j) total[j] += grads[i][j];
  }

  double loss = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    ok = ok && finite[i];
    loss += losses[i];
  }
  loss *= inv_n;
  if (!ok || !std::isfinite(loss)) {
    std::ostringstream msg;
    msg << "non-finite loss at step " << step << " (lr=" << format_double(lr)
        << ", loss=" << (ok ? format_double(loss) : std::string("nan")) << ")";
    throw NumericError(msg.str());
  }

  const auto lr_f = static_cast<float>(lr);
  const auto mu = static_cast<float>(momentum);
  for (std::size_t j = 0; j < p_count; ++j) {
    state.momentum[j] = mu * state.momentum[j] + total[j];
    state.params[j] -= lr_f * state.momentum[j];
  }
  for (float v : state.params)
    if (!std::isfinite(v)) throw NumericError("parameters diverged at step " + std::to_string(step) + " (lr=" + format_double(lr) + ")");
  return {loss};
}

namespace {

constexpr char kMagic[4] = {'A', 'L', 'S', 'M'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_floats(std::string& out, const std::vector<float>& v) {
  put_u64(out, v.size());
  for (float f : v) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

class Reader {
 public:
  Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

  std::uint64_t take(int bytes) {
    if (pos_ + static_cast<std::size_t>(bytes) > data_.size())
      throw IoError("truncated checkpoint: " + path_);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
  std::uint64_t u64() { return take(8); }
  std::vector<float> floats() {
    const std::uint64_t n = u64();
    if (n > (data_.size() - pos_) / 4) throw IoError("truncated checkpoint: " + path_);
    std::vector<float> v(n);
    for (auto& f : v) f = std::bit_cast<float>(u32());
    return v;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const ModelState& state, const std::filesystem::path& path) {
  std::string out(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  const NetConfig& c = state.config;
  put_u32(out, static_cast<std::uint32_t>(c.in_w));
  put_u32(out, static_cast<std::uint32_t>(c.in_h));
  put_u32(out, static_cast<std::uint32_t>(c.kernel));
  put_u32(out, static_cast<std::uint32_t>(c.hidden));
  put_u32(out, static_cast<std::uint32_t>(c.num_classes));
  put_u32(out, static_cast<std::uint32_t>(c.channels.size()));
  for (int ch : c.channels) put_u32(out, static_cast<std::uint32_t>(ch));
  put_u64(out, c.seed);
  put_floats(out, state.params);
  put_floats(out, state.momentum);

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write checkpoint: " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("cannot write checkpoint: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + path.string() + " (" + ec.message() + ")");
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path.string());
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (data.size() < 4 || data.compare(0, 4, kMagic, 4) != 0)
    throw IoError("not an ALSM checkpoint: " + path.string());
  Reader r(data.substr(4), path.string());
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version) + ": " + path.string());
  ModelState s;
  s.config.in_w = static_cast<int>(r.u32());
  s.config.in_h = static_cast<int>(r.u32());
  s.config.kernel = static_cast<int>(r.u32());
  s.config.hidden = static_cast<int>(r.u32());
  s.config.num_classes = static_cast<int>(r.u32());
  const std::uint32_t stages = r.u32();
  if (stages > 64) throw IoError("corrupt checkpoint header: " + path.string());
  s.config.channels.resize(stages);
  for (auto& ch : s.config.channels) ch = static_cast<int>(r.u32());
  s.config.seed = r.u64();
  s.params = r.floats();
  s.momentum = r.floats();
  if (!r.at_end()) throw IoError("trailing bytes in checkpoint: " + path.string());
  try {
    const ConvNet net(s.config);
    if (net.parameter_count() != s.params.size() ||
        (!s.momentum.empty() && s.momentum.size() != s.params.size()))
      throw IoError("checkpoint tensors do not match its config: " + path.string());
  } catch (const InvalidInput& e) {
    throw IoError("corrupt checkpoint config (" + std::string(e.what()) + "): " + path.string());
  }
  return s;
}

}  // namespace als
