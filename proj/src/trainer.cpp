#include "curricula/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <zlib.h>

#include "json.hpp"

#include "curricula/errors.hpp"

namespace curricula {

namespace {

constexpr char kMagic[8] = {'C', 'U', 'R', 'R', 'C', 'K', 'P', 'T'};

void append_u16(std::string& out, std::uint16_t value) {
  out.push_back(static_cast<char>(value & 0xff));
  out.push_back(static_cast<char>((value >> 8) & 0xff));
}

void append_u32(std::string& out, std::uint32_t value) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<char>((value >> shift) & 0xff));
  }
}

void append_f64(std::string& out, double value) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
  for (int shift = 0; shift < 64; shift += 8) {
    out.push_back(static_cast<char>((bits >> shift) & 0xff));
  }
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

double read_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

void softmax_from_logits(std::vector<double>& logits) {
  double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& value : logits) {
    value = std::exp(value - max_logit);
    sum += value;
  }
  for (double& value : logits) value /= sum;
}

}  // namespace

std::string to_string(Architecture arch) {
  return arch == Architecture::Linear ? "linear" : "one_hidden";
}

Architecture parse_architecture(std::string_view text) {
  if (text == "linear") return Architecture::Linear;
  if (text == "one_hidden") return Architecture::OneHidden;
  throw ParseError("unknown architecture '" + std::string(text) + "'");
}

void ModelShape::validate() const {
  if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
  if (classes < 2) throw ConfigError("classes must be >= 2");
  if (arch == Architecture::OneHidden && hidden < 1) {
    throw ConfigError("OneHidden requires hidden >= 1");
  }
}

std::size_t ModelShape::param_count() const {
  const std::size_t d = static_cast<std::size_t>(input_dim);
  const std::size_t c = static_cast<std::size_t>(classes);
  if (arch == Architecture::Linear) return d * c + c;
  const std::size_t h = static_cast<std::size_t>(hidden);
  return d * h + h + h * c + c;
}

std::size_t ModelShape::b1_offset() const {
  const std::size_t d = static_cast<std::size_t>(input_dim);
  return d * static_cast<std::size_t>(arch == Architecture::Linear ? classes : hidden);
}

std::size_t ModelShape::w2_offset() const {
  return b1_offset() + static_cast<std::size_t>(arch == Architecture::Linear ? classes : hidden);
}

std::size_t ModelShape::b2_offset() const {
  return w2_offset() + static_cast<std::size_t>(hidden) * static_cast<std::size_t>(classes);
}

ModelCheckpoint init_model(Architecture arch, int input_dim, std::uint64_t seed, int hidden) {
  ModelCheckpoint ckpt;
  ckpt.shape = {arch, input_dim, arch == Architecture::OneHidden ? hidden : 0, 12};
  ckpt.shape.validate();
  ckpt.params.assign(ckpt.shape.param_count(), 0.0);
  Rng rng(derive_seed(seed, 0x1217ULL));

  auto fill_uniform = [&rng](double* begin, std::size_t count, int fan_in) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) {
      begin[i] = (2.0 * rng.next_double() - 1.0) * scale;
    }
  };
  fill_uniform(ckpt.params.data(), ckpt.shape.b1_offset(), input_dim);
  if (arch == Architecture::OneHidden) {
    fill_uniform(ckpt.params.data() + ckpt.shape.w2_offset(),
                 ckpt.shape.b2_offset() - ckpt.shape.w2_offset(), hidden);
  }

  ckpt.opt.step_count = 0;
  ckpt.opt.m.assign(ckpt.params.size(), 0.0);
  ckpt.opt.v.assign(ckpt.params.size(), 0.0);
  ckpt.rng_state = rng.state();
  return ckpt;
}

std::vector<double> forward(const ModelShape& shape, const std::vector<double>& params,
                            std::span<const double> features) {
  if (static_cast<int>(features.size()) != shape.input_dim) {
    throw DimensionError("forward: input dimension " + std::to_string(features.size()) +
                         " != " + std::to_string(shape.input_dim));
  }
  const int c = shape.classes;
  std::vector<double> logits(static_cast<std::size_t>(c));
  if (shape.arch == Architecture::Linear) {
    const double* w1 = params.data();
    const double* b1 = params.data() + shape.b1_offset();
    for (int j = 0; j < c; ++j) logits[static_cast<std::size_t>(j)] = b1[j];
    for (int i = 0; i < shape.input_dim; ++i) {
      const double x = features[static_cast<std::size_t>(i)];
      for (int j = 0; j < c; ++j) logits[static_cast<std::size_t>(j)] += x * w1[i * c + j];
    }
  } else {
    const int h = shape.hidden;
    const double* w1 = params.data();
    const double* b1 = params.data() + shape.b1_offset();
    const double* w2 = params.data() + shape.w2_offset();
    const double* b2 = params.data() + shape.b2_offset();
    std::vector<double> hid(static_cast<std::size_t>(h));
    for (int k = 0; k < h; ++k) hid[static_cast<std::size_t>(k)] = b1[k];
    for (int i = 0; i < shape.input_dim; ++i) {
      const double x = features[static_cast<std::size_t>(i)];
      for (int k = 0; k < h; ++k) hid[static_cast<std::size_t>(k)] += x * w1[i * h + k];
    }
    for (double& value : hid) value = std::tanh(value);
    for (int j = 0; j < c; ++j) logits[static_cast<std::size_t>(j)] = b2[j];
    for (int k = 0; k < h; ++k) {
      const double a = hid[static_cast<std::size_t>(k)];
      for (int j = 0; j < c; ++j) logits[static_cast<std::size_t>(j)] += a * w2[k * c + j];
    }
  }
  softmax_from_logits(logits);
  return logits;
}

LossGrad loss_and_grad(const ModelShape& shape, const std::vector<double>& params,
                       std::span<const TrainingSample* const> batch) {
  if (batch.empty()) throw ConfigError("loss_and_grad: empty batch");
  const int c = shape.classes;
  const int d = shape.input_dim;
  LossGrad result;
  result.grad.assign(params.size(), 0.0);

  std::vector<double> logits(static_cast<std::size_t>(c));
  std::vector<double> hid;
  for (const TrainingSample* sample : batch) {
    if (static_cast<int>(sample->features.size()) != d) {
      throw DimensionError("loss_and_grad: sample '" + sample->clip_id + "' has dimension " +
                           std::to_string(sample->features.size()) + ", model expects " +
                           std::to_string(d));
    }
    if (sample->label < 0 || sample->label >= c) {
      throw ValidationError("loss_and_grad: label " + std::to_string(sample->label) +
                            " outside 0.." + std::to_string(c - 1));
    }
    const double* x = sample->features.data();
    if (shape.arch == Architecture::Linear) {
      const double* w1 = params.data();
      const double* b1 = params.data() + shape.b1_offset();
      for (int j = 0; j < c; ++j) logits[static_cast<std::size_t>(j)] = b1[j];
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < c; ++j) logits[static_cast<std::size_t>(j)] += x[i] * w1[i * c + j];
      }
    } else {
      const int h = shape.hidden;
      const double* w1 = params.data();
      const double* b1 = params.data() + shape.b1_offset();
      const double* w2 = params.data() + shape.w2_offset();
      const double* b2 = params.data() + shape.b2_offset();
      hid.assign(static_cast<std::size_t>(h), 0.0);
      for (int k = 0; k < h; ++k) hid[static_cast<std::size_t>(k)] = b1[k];
      for (int i = 0; i < d; ++i) {
        for (int k = 0; k < h; ++k) hid[static_cast<std::size_t>(k)] += x[i] * w1[i * h + k];
      }
      for (double& value : hid) value = std::tanh(value);
      for (int j = 0; j < c; ++j) logits[static_cast<std::size_t>(j)] = b2[j];
      for (int k = 0; k < h; ++k) {
        for (int j = 0; j < c; ++j) {
          logits[static_cast<std::size_t>(j)] += hid[static_cast<std::size_t>(k)] * w2[k * c + j];
        }
      }
    }

    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double value : logits) sum += std::exp(value - max_logit);
    const double log_sum = max_logit + std::log(sum);
    result.loss += log_sum - logits[static_cast<std::size_t>(sample->label)];

    // dL/dlogit = softmax - onehot(label)
    std::vector<double> dlogits(static_cast<std::size_t>(c));
    for (int j = 0; j < c; ++j) {
      dlogits[static_cast<std::size_t>(j)] =
          std::exp(logits[static_cast<std::size_t>(j)] - log_sum);
    }
    dlogits[static_cast<std::size_t>(sample->label)] -= 1.0;

    if (shape.arch == Architecture::Linear) {
      double* gw1 = result.grad.data();
      double* gb1 = result.grad.data() + shape.b1_offset();
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < c; ++j) gw1[i * c + j] += x[i] * dlogits[static_cast<std::size_t>(j)];
      }
      for (int j = 0; j < c; ++j) gb1[j] += dlogits[static_cast<std::size_t>(j)];
    } else {
      const int h = shape.hidden;
      const double* w1 = params.data();
      const double* w2 = params.data() + shape.w2_offset();
      double* gw1 = result.grad.data();
      double* gb1 = result.grad.data() + shape.b1_offset();
      double* gw2 = result.grad.data() + shape.w2_offset();
      double* gb2 = result.grad.data() + shape.b2_offset();
      (void)w1;
      for (int k = 0; k < h; ++k) {
        const double a = hid[static_cast<std::size_t>(k)];
        for (int j = 0; j < c; ++j) gw2[k * c + j] += a * dlogits[static_cast<std::size_t>(j)];
      }
      for (int j = 0; j < c; ++j) gb2[j] += dlogits[static_cast<std::size_t>(j)];
      for (int k = 0; k < h; ++k) {
        double dh = 0.0;
        for (int j = 0; j < c; ++j) dh += w2[k * c + j] * dlogits[static_cast<std::size_t>(j)];
        const double a = hid[static_cast<std::size_t>(k)];
        const double dpre = dh * (1.0 - a * a);
        for (int i = 0; i < d; ++i) gw1[i * h + k] += x[i] * dpre;
        gb1[k] += dpre;
      }
    }
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  result.loss *= inv;
  for (double& value : result.grad) value *= inv;
  return result;
}

void adamw_step(ModelCheckpoint& ckpt, const std::vector<double>& grad, double lr) {
  if (grad.size() != ckpt.params.size()) {
    throw DimensionError("adamw_step: gradient size " + std::to_string(grad.size()) +
                         " != parameter count " + std::to_string(ckpt.params.size()));
  }
  const AdamWConfig& hp = ckpt.opt.hp;
  ckpt.opt.step_count += 1;
  const double t = static_cast<double>(ckpt.opt.step_count);
  const double bc1 = 1.0 - std::pow(hp.beta1, t);
  const double bc2 = 1.0 - std::pow(hp.beta2, t);
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const double g = grad[i];
    double& m = ckpt.opt.m[i];
    double& v = ckpt.opt.v[i];
    m = hp.beta1 * m + (1.0 - hp.beta1) * g;
    v = hp.beta2 * v + (1.0 - hp.beta2) * g * g;
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    double& theta = ckpt.params[i];
    theta -= lr * (m_hat / (std::sqrt(v_hat) + hp.eps) + hp.weight_decay * theta);
    if (!std::isfinite(theta)) {
      throw NonFiniteError("adamw_step produced a non-finite parameter at index " +
                           std::to_string(i));
    }
  }
}

TrainResult train_epochs(ModelCheckpoint& ckpt, const SamplePool& pool, int batch_size,
                         double lr, int epochs, std::uint64_t seed) {
  if (pool.empty()) throw ConfigError("train_epochs requires a non-empty pool");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");

  TrainResult result;
  const std::size_t n = pool.samples.size();
  std::vector<std::size_t> order(n);
  std::vector<const TrainingSample*> batch;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    Rng rng(derive_seed(seed, ckpt.epochs_trained));
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(&pool.samples[order[i]]);
      LossGrad lg = loss_and_grad(ckpt.shape, ckpt.params, batch);
      adamw_step(ckpt, lg.grad, lr);
      result.loss_trace.push_back(lg.loss);
      ++result.iterations;
    }
    ckpt.epochs_trained += 1;
    ckpt.rng_state = rng.state();
  }
  return result;
}

double top1_accuracy(const ModelCheckpoint& ckpt, const SamplePool& pool) {
  if (pool.empty()) throw ConfigError("top1_accuracy requires a non-empty pool");
  std::size_t correct = 0;
  for (const auto& sample : pool.samples) {
    const std::vector<double> probs = forward(ckpt.shape, ckpt.params, sample.features);
    int best = 0;
    for (int j = 1; j < ckpt.shape.classes; ++j) {
      if (probs[static_cast<std::size_t>(j)] > probs[static_cast<std::size_t>(best)]) best = j;
    }
    if (best == sample.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pool.samples.size());
}

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path) {
  nlohmann::json header;
  header["arch"] = to_string(ckpt.shape.arch);
  header["input_dim"] = ckpt.shape.input_dim;
  header["hidden"] = ckpt.shape.hidden;
  header["classes"] = ckpt.shape.classes;
  header["hp"] = {{"beta1", ckpt.opt.hp.beta1},
                  {"beta2", ckpt.opt.hp.beta2},
                  {"eps", ckpt.opt.hp.eps},
                  {"weight_decay", ckpt.opt.hp.weight_decay}};
  header["step_count"] = ckpt.opt.step_count;
  header["epochs_trained"] = ckpt.epochs_trained;
  nlohmann::json lineage = nlohmann::json::array();
  for (const auto& stage : ckpt.lineage) {
    lineage.push_back({{"strategy", stage.strategy}, {"round", stage.round_index}});
  }
  header["lineage"] = std::move(lineage);
  header["rng_state"] = ckpt.rng_state;
  header["param_count"] = ckpt.params.size();
  const std::string header_text = header.dump();

  std::string blob;
  blob.append(kMagic, sizeof(kMagic));
  append_u16(blob, ModelCheckpoint::kFormatVersion);
  append_u32(blob, static_cast<std::uint32_t>(header_text.size()));
  blob += header_text;

  std::string payload;
  payload.reserve(ckpt.params.size() * 24);
  for (double value : ckpt.params) append_f64(payload, value);
  for (double value : ckpt.opt.m) append_f64(payload, value);
  for (double value : ckpt.opt.v) append_f64(payload, value);
  const std::uint32_t checksum = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
            static_cast<uInt>(payload.size())));
  blob += payload;
  append_u32(blob, checksum);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
  if (blob.size() < sizeof(kMagic) + 6 || std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(path.string() + ": not a checkpoint file (bad magic)");
  }
  const std::uint16_t version = read_u16(bytes + 8);
  if (version != ModelCheckpoint::kFormatVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " +
                      std::to_string(version));
  }
  const std::uint32_t header_len = read_u32(bytes + 10);
  std::size_t offset = 14;
  if (blob.size() < offset + header_len) {
    throw IntegrityError(path.string() + ": truncated header");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(blob.substr(offset, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": malformed checkpoint header: " + e.what());
  }
  offset += header_len;

  ModelCheckpoint ckpt;
  try {
    ckpt.shape.arch = parse_architecture(header.at("arch").get<std::string>());
    ckpt.shape.input_dim = header.at("input_dim").get<int>();
    ckpt.shape.hidden = header.at("hidden").get<int>();
    ckpt.shape.classes = header.at("classes").get<int>();
    ckpt.opt.hp.beta1 = header.at("hp").at("beta1").get<double>();
    ckpt.opt.hp.beta2 = header.at("hp").at("beta2").get<double>();
    ckpt.opt.hp.eps = header.at("hp").at("eps").get<double>();
    ckpt.opt.hp.weight_decay = header.at("hp").at("weight_decay").get<double>();
    ckpt.opt.step_count = header.at("step_count").get<std::uint64_t>();
    ckpt.epochs_trained = header.at("epochs_trained").get<std::uint64_t>();
    for (const auto& stage : header.at("lineage")) {
      ckpt.lineage.push_back({stage.at("strategy").get<std::string>(),
                              stage.at("round").get<int>()});
    }
    ckpt.rng_state = header.at("rng_state").get<Rng::State>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": incomplete checkpoint header: " + e.what());
  }
  ckpt.shape.validate();

  const std::size_t param_count = header.at("param_count").get<std::size_t>();
  if (param_count != ckpt.shape.param_count()) {
    throw IntegrityError(path.string() + ": header param_count " + std::to_string(param_count) +
                         " does not match shape (" +
                         std::to_string(ckpt.shape.param_count()) + ")");
  }
  const std::size_t payload_len = param_count * 3 * 8;
  if (blob.size() != offset + payload_len + 4) {
    throw IntegrityError(path.string() + ": payload length mismatch");
  }
  const std::uint32_t expected = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(blob.data() + offset),
            static_cast<uInt>(payload_len)));
  const std::uint32_t stored = read_u32(bytes + offset + payload_len);
  if (expected != stored) {
    throw IntegrityError(path.string() + ": payload checksum mismatch");
  }
  ckpt.params.resize(param_count);
  ckpt.opt.m.resize(param_count);
  ckpt.opt.v.resize(param_count);
  for (std::size_t i = 0; i < param_count; ++i) {
    ckpt.params[i] = read_f64(bytes + offset + i * 8);
  }
  for (std::size_t i = 0; i < param_count; ++i) {
    ckpt.opt.m[i] = read_f64(bytes + offset + (param_count + i) * 8);
  }
  for (std::size_t i = 0; i < param_count; ++i) {
    ckpt.opt.v[i] = read_f64(bytes + offset + (2 * param_count + i) * 8);
  }
  return ckpt;
}

}  // namespace curricula
