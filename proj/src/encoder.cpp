#include "semloc/encoder.hpp"

#include <cmath>

#include "semloc/rand.hpp"

namespace semloc {

namespace {

double xavier_bound(int fan_in, int fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace

std::size_t Encoder::param_count() const {
  const std::size_t in = config.in_dim;
  const std::size_t out = config.out_dim;
  const std::size_t hid = config.hidden_dim;
  if (hid == 0) return out * in + out;
  return hid * in + hid + out * hid + out;
}

Encoder Encoder::xavier_init(Modality modality, const EncoderConfig& config,
                             std::mt19937_64& rng) {
  if (config.in_dim < 1 || config.out_dim < 1 || config.hidden_dim < 0) {
    fail(ErrorKind::ConfigInvalid, "encoder dimensions must be positive");
  }
  Encoder enc;
  enc.modality = modality;
  enc.config = config;
  enc.params.assign(enc.param_count(), 0.0);

  std::size_t off = 0;
  const auto fill_layer = [&](int rows, int cols) {
    const double bound = xavier_bound(cols, rows);
    for (int i = 0; i < rows * cols; ++i) {
      enc.params[off++] = uniform_real(rng, -bound, bound);
    }
    off += rows;  // biases stay zero
  };
  if (config.hidden_dim == 0) {
    fill_layer(config.out_dim, config.in_dim);
  } else {
    fill_layer(config.hidden_dim, config.in_dim);
    fill_layer(config.out_dim, config.hidden_dim);
  }
  return enc;
}

Vec Encoder::encode_values(std::span<const double> input) const {
  if ((int)input.size() != config.in_dim) {
    fail(ErrorKind::DimensionMismatch,
         "encoder expects dimension " + std::to_string(config.in_dim) +
             ", got " + std::to_string(input.size()));
  }
  const int in = config.in_dim;
  const int out = config.out_dim;
  const int hid = config.hidden_dim;

  Vec z;
  if (hid == 0) {
    z.assign(out, 0.0);
    const double* w = params.data();
    const double* b = params.data() + (std::size_t)out * in;
    for (int o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w + (std::size_t)o * in;
      for (int i = 0; i < in; ++i) acc += row[i] * input[i];
      z[o] = acc;
    }
  } else {
    Vec h(hid, 0.0);
    const double* w1 = params.data();
    const double* b1 = params.data() + (std::size_t)hid * in;
    for (int o = 0; o < hid; ++o) {
      double acc = b1[o];
      const double* row = w1 + (std::size_t)o * in;
      for (int i = 0; i < in; ++i) acc += row[i] * input[i];
      h[o] = std::tanh(acc);
    }
    const double* w2 = b1 + hid;
    const double* b2 = w2 + (std::size_t)out * hid;
    z.assign(out, 0.0);
    for (int o = 0; o < out; ++o) {
      double acc = b2[o];
      const double* row = w2 + (std::size_t)o * hid;
      for (int i = 0; i < hid; ++i) acc += row[i] * h[i];
      z[o] = acc;
    }
  }
  return l2_normalize(z);
}

JointEmbedding Encoder::encode(const FeatureVector& input) const {
  return JointEmbedding{encode_values(input.values), modality};
}

void Encoder::backprop(std::span<const double> input,
                       std::span<const double> grad_output,
                       Vec& param_grad) const {
  if (param_grad.size() != params.size()) {
    fail(ErrorKind::ShapeMismatch, "parameter gradient buffer has wrong size");
  }
  const int in = config.in_dim;
  const int out = config.out_dim;
  const int hid = config.hidden_dim;

  // Forward pass again, keeping pre-normalization activations.
  Vec h;
  Vec z(out, 0.0);
  if (hid == 0) {
    const double* w = params.data();
    const double* b = params.data() + (std::size_t)out * in;
    for (int o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w + (std::size_t)o * in;
      for (int i = 0; i < in; ++i) acc += row[i] * input[i];
      z[o] = acc;
    }
  } else {
    h.assign(hid, 0.0);
    const double* w1 = params.data();
    const double* b1 = params.data() + (std::size_t)hid * in;
    for (int o = 0; o < hid; ++o) {
      double acc = b1[o];
      const double* row = w1 + (std::size_t)o * in;
      for (int i = 0; i < in; ++i) acc += row[i] * input[i];
      h[o] = std::tanh(acc);
    }
    const double* w2 = b1 + hid;
    const double* b2 = w2 + (std::size_t)out * hid;
    for (int o = 0; o < out; ++o) {
      double acc = b2[o];
      const double* row = w2 + (std::size_t)o * hid;
      for (int i = 0; i < hid; ++i) acc += row[i] * h[i];
      z[o] = acc;
    }
  }

  const double zn = norm(z);
  if (zn < 1e-12) fail(ErrorKind::ZeroVector, "zero pre-normalization output");

  // d(z / |z|): project the upstream gradient off the output direction and
  // divide by the norm.
  Vec e(out);
  for (int o = 0; o < out; ++o) e[o] = z[o] / zn;
  const double ge = dot(grad_output, e);
  Vec gz(out);
  for (int o = 0; o < out; ++o) {
    gz[o] = (grad_output[o] - ge * e[o]) / zn;
  }

  if (hid == 0) {
    double* dw = param_grad.data();
    double* db = param_grad.data() + (std::size_t)out * in;
    for (int o = 0; o < out; ++o) {
      double* row = dw + (std::size_t)o * in;
      for (int i = 0; i < in; ++i) row[i] += gz[o] * input[i];
      db[o] += gz[o];
    }
  } else {
    const double* w2 = params.data() + (std::size_t)hid * in + hid;
    Vec gh(hid, 0.0);
    double* dw2 = param_grad.data() + (std::size_t)hid * in + hid;
    double* db2 = dw2 + (std::size_t)out * hid;
    for (int o = 0; o < out; ++o) {
      const double* row = w2 + (std::size_t)o * hid;
      double* drow = dw2 + (std::size_t)o * hid;
      for (int i = 0; i < hid; ++i) {
        drow[i] += gz[o] * h[i];
        gh[i] += row[i] * gz[o];
      }
      db2[o] += gz[o];
    }
    double* dw1 = param_grad.data();
    double* db1 = param_grad.data() + (std::size_t)hid * in;
    for (int o = 0; o < hid; ++o) {
      const double gz1 = gh[o] * (1.0 - h[o] * h[o]);
      double* row = dw1 + (std::size_t)o * in;
      for (int i = 0; i < in; ++i) row[i] += gz1 * input[i];
      db1[o] += gz1;
    }
  }
}

void adam_step(Vec& params, std::span<const double> grads, AdamState& state,
               const AdamConfig& config) {
  if (grads.size() != params.size()) {
    fail(ErrorKind::ShapeMismatch, "gradient and parameter sizes differ");
  }
  if (state.m.empty()) state.m.assign(params.size(), 0.0);
  if (state.v.empty()) state.v.assign(params.size(), 0.0);
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    fail(ErrorKind::ShapeMismatch, "optimizer state has wrong size");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, (double)state.t);
  const double bc2 = 1.0 - std::pow(config.beta2, (double)state.t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= config.lr * (mhat / (std::sqrt(vhat) + config.eps) +
                              config.weight_decay * params[i]);
  }
}

}  // namespace semloc
