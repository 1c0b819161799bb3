#include "anssel/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>

#include "anssel/error.hpp"
#include "anssel/rng.hpp"

namespace anssel {

namespace {

constexpr double kInitStd = 0.02;
constexpr double kNormEps = 1e-12;
constexpr double kGeluCoeff = 0.044715;

template <typename T>
using Mat = Matrix<T>;
template <typename T>
using Row = RowVector<T>;

// y = gain * (x - mean) * rstd + bias, row by row.
template <typename T, typename Gain, typename Bias>
Mat<T> layer_norm(const Mat<T>& x, const Gain& gain, const Bias& bias, Mat<T>& xhat,
                  Row<T>& rstd) {
  const auto n = x.rows();
  const auto h = x.cols();
  xhat.resize(n, h);
  rstd.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mean = x.row(i).mean();
    const auto centered = (x.row(i).array() - mean).matrix().eval();
    const T var = centered.squaredNorm() / static_cast<T>(h);
    rstd(i) = T(1) / std::sqrt(var + static_cast<T>(kNormEps));
    xhat.row(i) = centered * rstd(i);
  }
  Mat<T> y = xhat.array().rowwise() * gain.array();
  y.rowwise() += bias;
  return y;
}

// Returns dx; accumulates gain/bias gradients.
template <typename T, typename Gain, typename GradGain, typename GradBias>
Mat<T> layer_norm_backward(const Mat<T>& dy, const Mat<T>& xhat, const Row<T>& rstd,
                           const Gain& gain, GradGain&& dgain, GradBias&& dbias) {
  dgain += (dy.array() * xhat.array()).colwise().sum().matrix();
  dbias += dy.colwise().sum();
  const Mat<T> dxhat = dy.array().rowwise() * gain.array();
  const T inv_h = T(1) / static_cast<T>(dy.cols());
  Mat<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const T mean_d = dxhat.row(i).sum() * inv_h;
    const T mean_dx = dxhat.row(i).dot(xhat.row(i)) * inv_h;
    dx.row(i) = rstd(i) * (dxhat.row(i).array() - mean_d - xhat.row(i).array() * mean_dx).matrix();
  }
  return dx;
}

template <typename T>
Mat<T> dropout_mask(Rng& rng, Eigen::Index rows, Eigen::Index cols, double rate) {
  Mat<T> mask(rows, cols);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      mask(i, j) = rng.uniform() < rate ? T(0) : keep_scale;
    }
  }
  return mask;
}

template <typename T>
T sigmoid(T z) {
  return T(1) / (T(1) + std::exp(-z));
}

template <typename T>
SequenceCache<T> forward_sequence(const ModelParams<T>& params, const EncodedPair& pair,
                                  Rng* dropout_rng) {
  const ModelConfig& cfg = params.config();
  const ParamLayout& lay = params.layout();
  const std::size_t hidden = cfg.hidden_size;
  const std::size_t d = cfg.head_dim();
  const auto n = static_cast<Eigen::Index>(pair.length());
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d)));

  SequenceCache<T> sc;
  sc.tokens.assign(pair.token_ids.begin(), pair.token_ids.begin() + n);
  sc.segments.assign(pair.segment_ids.begin(), pair.segment_ids.begin() + n);

  const auto tok = params.matrix(lay.token_embedding, cfg.vocab_size, hidden);
  const auto pos = params.matrix(lay.position_embedding, cfg.max_len, hidden);
  const auto seg = params.matrix(lay.segment_embedding, 2, hidden);
  Mat<T> x(n, static_cast<Eigen::Index>(hidden));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto id = sc.tokens[static_cast<std::size_t>(i)];
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size) {
      throw DataError("token id " + std::to_string(id) + " outside vocab of size " +
                      std::to_string(cfg.vocab_size));
    }
    x.row(i) = tok.row(id) + pos.row(i) + seg.row(sc.segments[static_cast<std::size_t>(i)]);
  }

  const bool drop = dropout_rng != nullptr && cfg.dropout_rate > 0.0;
  sc.layers.resize(cfg.num_layers);
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const auto& L = lay.layers[l];
    LayerCache<T>& lc = sc.layers[l];
    lc.input = x;
    lc.query = x * params.matrix(L.query_w, hidden, hidden);
    lc.query.rowwise() += params.vector(L.query_b, hidden);
    lc.key = x * params.matrix(L.key_w, hidden, hidden);
    lc.key.rowwise() += params.vector(L.key_b, hidden);
    lc.value = x * params.matrix(L.value_w, hidden, hidden);
    lc.value.rowwise() += params.vector(L.value_b, hidden);

    lc.context.resize(n, static_cast<Eigen::Index>(hidden));
    lc.probs.resize(cfg.num_heads);
    if (drop) lc.probs_drop.resize(cfg.num_heads);
    for (std::size_t h = 0; h < cfg.num_heads; ++h) {
      const auto c0 = static_cast<Eigen::Index>(h * d);
      const auto dd = static_cast<Eigen::Index>(d);
      Mat<T> s = (lc.query.middleCols(c0, dd) * lc.key.middleCols(c0, dd).transpose()) * scale;
      for (Eigen::Index i = 0; i < n; ++i) {
        const T mx = s.row(i).maxCoeff();
        s.row(i) = (s.row(i).array() - mx).exp().matrix();
        s.row(i) /= s.row(i).sum();
      }
      lc.probs[h] = std::move(s);
      if (drop) {
        lc.probs_drop[h] = dropout_mask<T>(*dropout_rng, n, n, cfg.dropout_rate);
        lc.context.middleCols(c0, dd) =
            lc.probs[h].cwiseProduct(lc.probs_drop[h]) * lc.value.middleCols(c0, dd);
      } else {
        lc.context.middleCols(c0, dd) = lc.probs[h] * lc.value.middleCols(c0, dd);
      }
    }
    Mat<T> residual = lc.context * params.matrix(L.output_w, hidden, hidden);
    residual.rowwise() += params.vector(L.output_b, hidden);
    residual += x;
    lc.attn_out = layer_norm<T>(residual, params.vector(L.attn_norm_g, hidden),
                                params.vector(L.attn_norm_b, hidden), lc.attn_norm_xhat,
                                lc.attn_norm_rstd);

    lc.ffn_pre = lc.attn_out * params.matrix(L.ffn_in_w, hidden, cfg.ffn_size);
    lc.ffn_pre.rowwise() += params.vector(L.ffn_in_b, cfg.ffn_size);
    lc.ffn_act = lc.ffn_pre.unaryExpr([](T v) { return static_cast<T>(gelu(v)); });
    if (drop) {
      lc.ffn_drop = dropout_mask<T>(*dropout_rng, n, lc.ffn_act.cols(), cfg.dropout_rate);
      lc.ffn_act = lc.ffn_act.cwiseProduct(lc.ffn_drop);
    }
    residual = lc.ffn_act * params.matrix(L.ffn_out_w, cfg.ffn_size, hidden);
    residual.rowwise() += params.vector(L.ffn_out_b, hidden);
    residual += lc.attn_out;
    x = layer_norm<T>(residual, params.vector(L.ffn_norm_g, hidden),
                      params.vector(L.ffn_norm_b, hidden), lc.ffn_norm_xhat, lc.ffn_norm_rstd);
  }
  sc.cls = x.row(0);
  const T z = sc.cls.dot(params.vector(lay.head_w, hidden)) + params.values()[lay.head_b];
  sc.score = sigmoid(z);
  return sc;
}

template <typename T>
void backward_sequence(const ModelParams<T>& params, const SequenceCache<T>& sc, T score_grad,
                       Gradients<T>& grads) {
  const ModelConfig& cfg = params.config();
  const ParamLayout& lay = params.layout();
  const std::size_t hidden = cfg.hidden_size;
  const std::size_t d = cfg.head_dim();
  const auto n = static_cast<Eigen::Index>(sc.tokens.size());
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d)));

  const T dz = score_grad * sc.score * (T(1) - sc.score);
  grads.vector(lay.head_w, hidden) += dz * sc.cls;
  grads.values()[lay.head_b] += dz;

  Mat<T> dx = Mat<T>::Zero(n, static_cast<Eigen::Index>(hidden));
  dx.row(0) = dz * params.vector(lay.head_w, hidden);

  for (std::size_t l = cfg.num_layers; l-- > 0;) {
    const auto& L = lay.layers[l];
    const LayerCache<T>& lc = sc.layers[l];

    // Second sub-block: x = LN(attn_out + FFN(attn_out)).
    Mat<T> dres = layer_norm_backward<T>(dx, lc.ffn_norm_xhat, lc.ffn_norm_rstd,
                                         params.vector(L.ffn_norm_g, hidden),
                                         grads.vector(L.ffn_norm_g, hidden),
                                         grads.vector(L.ffn_norm_b, hidden));
    grads.matrix(L.ffn_out_w, cfg.ffn_size, hidden).noalias() += lc.ffn_act.transpose() * dres;
    grads.vector(L.ffn_out_b, hidden) += dres.colwise().sum();
    Mat<T> dact = dres * params.matrix(L.ffn_out_w, cfg.ffn_size, hidden).transpose();
    if (lc.ffn_drop.size() != 0) dact = dact.cwiseProduct(lc.ffn_drop);
    const Mat<T> dpre = dact.cwiseProduct(
        lc.ffn_pre.unaryExpr([](T v) { return static_cast<T>(gelu_grad(v)); }));
    grads.matrix(L.ffn_in_w, hidden, cfg.ffn_size).noalias() += lc.attn_out.transpose() * dpre;
    grads.vector(L.ffn_in_b, cfg.ffn_size) += dpre.colwise().sum();
    Mat<T> dattn_out = dres;
    dattn_out.noalias() += dpre * params.matrix(L.ffn_in_w, hidden, cfg.ffn_size).transpose();

    // First sub-block: attn_out = LN(input + Attention(input)).
    dres = layer_norm_backward<T>(dattn_out, lc.attn_norm_xhat, lc.attn_norm_rstd,
                                  params.vector(L.attn_norm_g, hidden),
                                  grads.vector(L.attn_norm_g, hidden),
                                  grads.vector(L.attn_norm_b, hidden));
    grads.matrix(L.output_w, hidden, hidden).noalias() += lc.context.transpose() * dres;
    grads.vector(L.output_b, hidden) += dres.colwise().sum();
    const Mat<T> dcontext = dres * params.matrix(L.output_w, hidden, hidden).transpose();

    Mat<T> dquery(n, static_cast<Eigen::Index>(hidden));
    Mat<T> dkey(n, static_cast<Eigen::Index>(hidden));
    Mat<T> dvalue(n, static_cast<Eigen::Index>(hidden));
    for (std::size_t h = 0; h < cfg.num_heads; ++h) {
      const auto c0 = static_cast<Eigen::Index>(h * d);
      const auto dd = static_cast<Eigen::Index>(d);
      const bool dropped = !lc.probs_drop.empty();
      const Mat<T>& p = lc.probs[h];
      const auto dctx_h = dcontext.middleCols(c0, dd);
      Mat<T> dprobs = dctx_h * lc.value.middleCols(c0, dd).transpose();
      if (dropped) {
        dvalue.middleCols(c0, dd) = p.cwiseProduct(lc.probs_drop[h]).transpose() * dctx_h;
        dprobs = dprobs.cwiseProduct(lc.probs_drop[h]);
      } else {
        dvalue.middleCols(c0, dd) = p.transpose() * dctx_h;
      }
      // softmax: ds = p * (dp - sum(dp * p))
      Mat<T> dscores(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const T dotp = dprobs.row(i).dot(p.row(i));
        dscores.row(i) = p.row(i).cwiseProduct((dprobs.row(i).array() - dotp).matrix());
      }
      dscores *= scale;
      dquery.middleCols(c0, dd) = dscores * lc.key.middleCols(c0, dd);
      dkey.middleCols(c0, dd) = dscores.transpose() * lc.query.middleCols(c0, dd);
    }
    grads.matrix(L.query_w, hidden, hidden).noalias() += lc.input.transpose() * dquery;
    grads.vector(L.query_b, hidden) += dquery.colwise().sum();
    grads.matrix(L.key_w, hidden, hidden).noalias() += lc.input.transpose() * dkey;
    grads.vector(L.key_b, hidden) += dkey.colwise().sum();
    grads.matrix(L.value_w, hidden, hidden).noalias() += lc.input.transpose() * dvalue;
    grads.vector(L.value_b, hidden) += dvalue.colwise().sum();

    dx = dres;
    dx.noalias() += dquery * params.matrix(L.query_w, hidden, hidden).transpose();
    dx.noalias() += dkey * params.matrix(L.key_w, hidden, hidden).transpose();
    dx.noalias() += dvalue * params.matrix(L.value_w, hidden, hidden).transpose();
  }

  auto dtok = grads.matrix(lay.token_embedding, cfg.vocab_size, hidden);
  auto dpos = grads.matrix(lay.position_embedding, cfg.max_len, hidden);
  auto dseg = grads.matrix(lay.segment_embedding, 2, hidden);
  for (Eigen::Index i = 0; i < n; ++i) {
    dtok.row(sc.tokens[static_cast<std::size_t>(i)]) += dx.row(i);
    dpos.row(i) += dx.row(i);
    dseg.row(sc.segments[static_cast<std::size_t>(i)]) += dx.row(i);
  }
}

}  // namespace

std::string_view to_string(TensorClass cls) {
  switch (cls) {
    case TensorClass::kEmbedding: return "embedding";
    case TensorClass::kAttention: return "attention";
    case TensorClass::kFeedForward: return "feed_forward";
    case TensorClass::kLayerNorm: return "layer_norm";
    case TensorClass::kHead: return "head";
  }
  return "unknown";
}

void ModelConfig::validate() const {
  if (vocab_size < kNumReserved) throw ConfigError("vocab_size must cover the reserved tokens");
  if (hidden_size < 1 || num_layers < 1 || num_heads < 1 || ffn_size < 1 || max_len < 1) {
    throw ConfigError("model sizes must be >= 1");
  }
  if (hidden_size % num_heads != 0) {
    throw ConfigError("hidden_size must be divisible by num_heads");
  }
  if (ffn_size < hidden_size) throw ConfigError("ffn_size must be >= hidden_size");
  if (max_len < kMinMaxLen) throw ConfigError("max_len must be >= 8");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate must lie in [0, 1)");
  }
}

bool TensorInfo::is_weight() const {
  return name.ends_with("_weight") || name.ends_with("_embedding");
}

std::size_t ParamLayout::push(std::string name, TensorClass cls, std::size_t rows,
                              std::size_t cols) {
  const std::size_t offset = total_;
  tensors_.push_back(TensorInfo{std::move(name), cls, rows, cols, offset});
  total_ += rows * cols;
  return offset;
}

ParamLayout::ParamLayout(const ModelConfig& c) {
  const std::size_t H = c.hidden_size;
  token_embedding = push("token_embedding", TensorClass::kEmbedding, c.vocab_size, H);
  position_embedding = push("position_embedding", TensorClass::kEmbedding, c.max_len, H);
  segment_embedding = push("segment_embedding", TensorClass::kEmbedding, 2, H);
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    Layer L{};
    L.query_w = push(p + "attn_query_weight", TensorClass::kAttention, H, H);
    L.query_b = push(p + "attn_query_bias", TensorClass::kAttention, 1, H);
    L.key_w = push(p + "attn_key_weight", TensorClass::kAttention, H, H);
    L.key_b = push(p + "attn_key_bias", TensorClass::kAttention, 1, H);
    L.value_w = push(p + "attn_value_weight", TensorClass::kAttention, H, H);
    L.value_b = push(p + "attn_value_bias", TensorClass::kAttention, 1, H);
    L.output_w = push(p + "attn_output_weight", TensorClass::kAttention, H, H);
    L.output_b = push(p + "attn_output_bias", TensorClass::kAttention, 1, H);
    L.attn_norm_g = push(p + "attn_norm_gain", TensorClass::kLayerNorm, 1, H);
    L.attn_norm_b = push(p + "attn_norm_bias", TensorClass::kLayerNorm, 1, H);
    L.ffn_in_w = push(p + "ffn_in_weight", TensorClass::kFeedForward, H, c.ffn_size);
    L.ffn_in_b = push(p + "ffn_in_bias", TensorClass::kFeedForward, 1, c.ffn_size);
    L.ffn_out_w = push(p + "ffn_out_weight", TensorClass::kFeedForward, c.ffn_size, H);
    L.ffn_out_b = push(p + "ffn_out_bias", TensorClass::kFeedForward, 1, H);
    L.ffn_norm_g = push(p + "ffn_norm_gain", TensorClass::kLayerNorm, 1, H);
    L.ffn_norm_b = push(p + "ffn_norm_bias", TensorClass::kLayerNorm, 1, H);
    layers.push_back(L);
  }
  head_w = push("head_weight", TensorClass::kHead, 1, H);
  head_b = push("head_bias", TensorClass::kHead, 1, 1);
}

std::size_t ParamLayout::tensor_index(std::size_t flat) const {
  auto it = std::upper_bound(tensors_.begin(), tensors_.end(), flat,
                             [](std::size_t v, const TensorInfo& t) { return v < t.offset; });
  if (it == tensors_.begin() || flat >= total_) throw Error("flat index out of range");
  return static_cast<std::size_t>(std::distance(tensors_.begin(), it) - 1);
}

template <typename T, typename Tag>
bool ParameterBlock<T, Tag>::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
ModelParams<T> init_params(const ModelConfig& config) {
  config.validate();
  ModelParams<T> params(config);
  Rng rng(config.seed);
  auto values = params.values();
  for (const auto& t : params.layout().tensors()) {
    const bool gain = t.name.ends_with("_gain");
    for (std::size_t i = 0; i < t.size(); ++i) {
      T& v = values[t.offset + i];
      if (t.is_weight()) {
        v = static_cast<T>(rng.truncated_normal(kInitStd));
      } else {
        v = gain ? T(1) : T(0);
      }
    }
  }
  return params;
}

template <typename To, typename From>
ModelParams<To> convert_impl(const ModelParams<From>& params) {
  ModelParams<To> out(params.config());
  auto src = params.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<To>(src[i]);
  return out;
}

template <typename T>
ModelParams<T> convert_params(const ModelParams<double>& params) {
  return convert_impl<T, double>(params);
}
template <typename T>
ModelParams<T> convert_params(const ModelParams<float>& params) {
  return convert_impl<T, float>(params);
}

template <typename T>
std::uint64_t fingerprint(std::span<const T> values) {
  using Bits = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  std::uint64_t h = 0xCBF29CE484222325ULL ^ values.size();
  for (T v : values) {
    h ^= static_cast<std::uint64_t>(std::bit_cast<Bits>(v));
    h *= 0x100000001B3ULL;
    h ^= h >> 29;
  }
  return h;
}

template <typename T>
ForwardResult<T> forward(const ModelParams<T>& params, std::span<const EncodedPair> batch,
                         bool train_mode, std::uint64_t dropout_seed) {
  const ModelConfig& cfg = params.config();
  if (batch.empty()) throw DataError("forward called with an empty batch");
  ForwardResult<T> result;
  result.cache.params_fingerprint = fingerprint<T>(params.values());
  result.cache.params_size = params.size();
  result.cache.train_mode = train_mode;
  result.cache.sequences.reserve(batch.size());
  result.scores.reserve(batch.size());
  Rng rng(dropout_seed);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const EncodedPair& pair = batch[b];
    if (pair.max_len() != cfg.max_len) {
      throw DataError("pair " + std::to_string(b) + " has length " +
                      std::to_string(pair.max_len()) + ", model expects " +
                      std::to_string(cfg.max_len));
    }
    check_layout(pair);
    result.cache.sequences.push_back(forward_sequence(params, pair, train_mode ? &rng : nullptr));
    result.scores.push_back(result.cache.sequences.back().score);
  }
  return result;
}

template <typename T>
Gradients<T> backward(const ModelParams<T>& params, const ForwardCache<T>& cache,
                      std::span<const T> score_grads) {
  if (cache.params_size != params.size() ||
      cache.params_fingerprint != fingerprint<T>(params.values())) {
    throw Error("forward cache does not belong to these parameters");
  }
  if (score_grads.size() != cache.sequences.size()) {
    throw Error("score_grads has " + std::to_string(score_grads.size()) +
                " entries for a batch of " + std::to_string(cache.sequences.size()));
  }
  Gradients<T> grads(params.config());
  for (std::size_t b = 0; b < score_grads.size(); ++b) {
    if (score_grads[b] == T(0)) continue;
    backward_sequence(params, cache.sequences[b], score_grads[b], grads);
  }
  return grads;
}

template <typename T>
std::vector<T> score_batch(const ModelParams<T>& params, std::span<const EncodedPair> batch) {
  std::vector<T> scores;
  scores.reserve(batch.size());
  for (const auto& pair : batch) {
    if (pair.max_len() != params.config().max_len) {
      throw DataError("pair length does not match model max_len");
    }
    check_layout(pair);
    scores.push_back(forward_sequence<T>(params, pair, nullptr).score);
  }
  return scores;
}

template <typename T>
T score_pair(const ModelParams<T>& params, const Vocab& vocab, std::string_view question,
             std::string_view answer, TruncationPolicy policy) {
  const EncodedPair pair = encode_pair(vocab, question, answer, params.config().max_len, policy);
  return score_batch(params, std::span(&pair, 1)).front();
}

double gelu(double x) {
  const double c = std::sqrt(2.0 / std::numbers::pi);
  return 0.5 * x * (1.0 + std::tanh(c * (x + kGeluCoeff * x * x * x)));
}

double gelu_grad(double x) {
  const double c = std::sqrt(2.0 / std::numbers::pi);
  const double t = std::tanh(c * (x + kGeluCoeff * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * kGeluCoeff * x * x);
}

#define ANSSEL_INSTANTIATE(T)                                                                  \
  template class ParameterBlock<T, ParamsTag>;                                                 \
  template class ParameterBlock<T, GradsTag>;                                                  \
  template ModelParams<T> init_params<T>(const ModelConfig&);                                  \
  template ModelParams<T> convert_params<T>(const ModelParams<double>&);                       \
  template ModelParams<T> convert_params<T>(const ModelParams<float>&);                        \
  template std::uint64_t fingerprint<T>(std::span<const T>);                                   \
  template ForwardResult<T> forward<T>(const ModelParams<T>&, std::span<const EncodedPair>,    \
                                       bool, std::uint64_t);                                   \
  template Gradients<T> backward<T>(const ModelParams<T>&, const ForwardCache<T>&,             \
                                    std::span<const T>);                                       \
  template std::vector<T> score_batch<T>(const ModelParams<T>&, std::span<const EncodedPair>); \
  template T score_pair<T>(const ModelParams<T>&, const Vocab&, std::string_view,              \
                           std::string_view, TruncationPolicy);

ANSSEL_INSTANTIATE(float)
ANSSEL_INSTANTIATE(double)

#undef ANSSEL_INSTANTIATE

}  // namespace anssel
