#include "semloc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "semloc/rand.hpp"

namespace semloc {

Json config_to_json(const TrainConfig& c) {
  return Json{
      {"batch_size", c.batch_size},
      {"learning_rate", c.learning_rate},
      {"weight_decay", c.weight_decay},
      {"plateau_patience", c.plateau_patience},
      {"decay_factor", c.decay_factor},
      {"max_epochs", c.max_epochs},
      {"max_lr_decays", c.max_lr_decays},
      {"seed", c.seed},
      {"embed_dim", c.embed_dim},
      {"hidden_dim", c.hidden_dim},
      {"alpha_text", c.weights.alpha_text},
      {"beta_img", c.weights.beta_img},
      {"base_loss", to_string(c.weights.base)},
      {"triplet_margin", c.triplet.margin},
      {"angular_tan_sq_alpha", c.angular.tan_sq_alpha},
      {"neighbor_source", to_string(c.neighbor_source)},
      {"split_ratios", c.split_ratios},
  };
}

TrainConfig config_from_json(const Json& j) {
  if (!j.is_object()) {
    fail(ErrorKind::ConfigInvalid, "config must be a JSON object");
  }
  TrainConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "weight_decay") c.weight_decay = value.get<double>();
      else if (key == "plateau_patience") c.plateau_patience = value.get<int>();
      else if (key == "decay_factor") c.decay_factor = value.get<double>();
      else if (key == "max_epochs") c.max_epochs = value.get<int>();
      else if (key == "max_lr_decays") c.max_lr_decays = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "embed_dim") c.embed_dim = value.get<int>();
      else if (key == "hidden_dim") c.hidden_dim = value.get<int>();
      else if (key == "alpha_text") c.weights.alpha_text = value.get<double>();
      else if (key == "beta_img") c.weights.beta_img = value.get<double>();
      else if (key == "base_loss")
        c.weights.base = base_loss_from_string(value.get<std::string>());
      else if (key == "triplet_margin") c.triplet.margin = value.get<double>();
      else if (key == "angular_tan_sq_alpha")
        c.angular.tan_sq_alpha = value.get<double>();
      else if (key == "neighbor_source")
        c.neighbor_source =
            neighbor_source_from_string(value.get<std::string>());
      else if (key == "split_ratios")
        c.split_ratios = value.get<std::array<double, 3>>();
      else
        fail(ErrorKind::ConfigInvalid, "unknown config key: " + key);
    }
  } catch (const Json::exception& e) {
    fail(ErrorKind::ConfigInvalid, std::string("bad config value: ") + e.what());
  }
  return c;
}

void validate(const TrainConfig& c) {
  if (c.batch_size < 2) fail(ErrorKind::ConfigInvalid, "batch_size must be >= 2");
  if (c.learning_rate <= 0.0) {
    fail(ErrorKind::ConfigInvalid, "learning_rate must be positive");
  }
  if (c.weight_decay < 0.0) {
    fail(ErrorKind::ConfigInvalid, "weight_decay must be >= 0");
  }
  if (c.plateau_patience < 1) {
    fail(ErrorKind::ConfigInvalid, "plateau_patience must be >= 1");
  }
  if (c.decay_factor <= 0.0 || c.decay_factor >= 1.0) {
    fail(ErrorKind::ConfigInvalid, "decay_factor must lie in (0, 1)");
  }
  if (c.max_epochs < 1) fail(ErrorKind::ConfigInvalid, "max_epochs must be >= 1");
  if (c.max_lr_decays < 0) {
    fail(ErrorKind::ConfigInvalid, "max_lr_decays must be >= 0");
  }
  if (c.embed_dim < 1) fail(ErrorKind::ConfigInvalid, "embed_dim must be >= 1");
  if (c.hidden_dim < 0) fail(ErrorKind::ConfigInvalid, "hidden_dim must be >= 0");
  if (c.weights.alpha_text < 0.0 || c.weights.beta_img < 0.0) {
    fail(ErrorKind::ConfigInvalid, "loss weights must be >= 0");
  }
  if (c.triplet.margin < 0.0) {
    fail(ErrorKind::ConfigInvalid, "triplet_margin must be >= 0");
  }
  if (c.angular.tan_sq_alpha <= 0.0) {
    fail(ErrorKind::ConfigInvalid, "angular_tan_sq_alpha must be positive");
  }
  double sum = 0.0;
  for (double r : c.split_ratios) {
    if (r < 0.0) fail(ErrorKind::ConfigInvalid, "split ratios must be >= 0");
    sum += r;
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    fail(ErrorKind::ConfigInvalid, "split ratios must sum to 1");
  }
}

std::string config_hash(const TrainConfig& config) {
  return to_hex(fnv1a64(config_to_json(config).dump()));
}

void save_metrics(const std::vector<EpochMetrics>& metrics,
                  const std::string& path) {
  std::vector<Json> rows;
  rows.reserve(metrics.size());
  for (const EpochMetrics& m : metrics) {
    Json row{{"epoch", m.epoch}, {"train_loss", m.train_loss}, {"lr", m.lr}};
    if (std::isfinite(m.val_loss)) {
      row["val_loss"] = m.val_loss;
    } else {
      row["val_loss"] = nullptr;
    }
    rows.push_back(std::move(row));
  }
  write_jsonl(path, rows);
}

std::vector<EpochMetrics> load_metrics(const std::string& path) {
  std::vector<EpochMetrics> out;
  for (const Json& row : read_jsonl(path)) {
    EpochMetrics m;
    m.epoch = row.at("epoch").get<int>();
    m.train_loss = row.at("train_loss").get<double>();
    m.val_loss = row.at("val_loss").is_number()
                     ? row.at("val_loss").get<double>()
                     : std::numeric_limits<double>::quiet_NaN();
    m.lr = row.at("lr").get<double>();
    out.push_back(m);
  }
  return out;
}

namespace {

Json encoder_to_json(const Encoder& enc) {
  return Json{{"in_dim", enc.config.in_dim},
              {"hidden_dim", enc.config.hidden_dim},
              {"out_dim", enc.config.out_dim},
              {"dtype", "fp64"},
              {"params", encode_doubles(enc.params)}};
}

Encoder encoder_from_json(const Json& j, Modality modality) {
  Encoder enc;
  enc.modality = modality;
  enc.config.in_dim = j.at("in_dim").get<int>();
  enc.config.hidden_dim = j.at("hidden_dim").get<int>();
  enc.config.out_dim = j.at("out_dim").get<int>();
  if (j.at("dtype").get<std::string>() != "fp64") {
    fail(ErrorKind::ParseError, "unsupported parameter dtype");
  }
  enc.params = decode_doubles(j.at("params").get<std::string>());
  if (enc.params.size() != enc.param_count()) {
    fail(ErrorKind::ShapeMismatch, "parameter blob does not match dimensions");
  }
  return enc;
}

Json adam_to_json(const AdamState& s) {
  return Json{{"t", s.t},
              {"dtype", "fp64"},
              {"m", encode_doubles(s.m)},
              {"v", encode_doubles(s.v)}};
}

AdamState adam_from_json(const Json& j, std::size_t expected) {
  AdamState s;
  s.t = j.at("t").get<long long>();
  s.m = decode_doubles(j.at("m").get<std::string>());
  s.v = decode_doubles(j.at("v").get<std::string>());
  if ((!s.m.empty() && s.m.size() != expected) ||
      (!s.v.empty() && s.v.size() != expected)) {
    fail(ErrorKind::ShapeMismatch, "optimizer blob does not match parameters");
  }
  return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  Json j{
      {"format", "semloc.checkpoint"},
      {"version", 1},
      {"epoch", ck.epoch},
      {"config_hash", ck.hash},
      {"config", config_to_json(ck.config)},
      {"encoders",
       {{"image", encoder_to_json(ck.image_encoder)},
        {"text", encoder_to_json(ck.text_encoder)}}},
      {"adam",
       {{"image", adam_to_json(ck.adam_image)},
        {"text", adam_to_json(ck.adam_text)}}},
  };
  if (std::isfinite(ck.best_val_loss)) {
    j["best_val_loss"] = ck.best_val_loss;
  } else {
    j["best_val_loss"] = nullptr;
  }
  write_text_file(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  Json j = Json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    fail(ErrorKind::ParseError, path + ": not valid JSON");
  }
  try {
    if (j.at("format").get<std::string>() != "semloc.checkpoint" ||
        j.at("version").get<int>() != 1) {
      fail(ErrorKind::ParseError, path + ": unknown checkpoint format");
    }
    Checkpoint ck;
    ck.epoch = j.at("epoch").get<int>();
    ck.best_val_loss = j.at("best_val_loss").is_number()
                           ? j.at("best_val_loss").get<double>()
                           : std::numeric_limits<double>::quiet_NaN();
    ck.hash = j.at("config_hash").get<std::string>();
    ck.config = config_from_json(j.at("config"));
    ck.image_encoder =
        encoder_from_json(j.at("encoders").at("image"), Modality::image);
    ck.text_encoder =
        encoder_from_json(j.at("encoders").at("text"), Modality::text);
    ck.adam_image = adam_from_json(j.at("adam").at("image"),
                                   ck.image_encoder.params.size());
    ck.adam_text =
        adam_from_json(j.at("adam").at("text"), ck.text_encoder.params.size());
    return ck;
  } catch (const Json::exception& e) {
    fail(ErrorKind::ParseError,
         path + ": malformed checkpoint: " + std::string(e.what()));
  }
}

std::vector<BatchItem> assemble_batch(
    const PairDataset& dataset, const NeighborTable& table,
    const std::vector<std::string>& batch_ids,
    const std::vector<std::string>& allowed_neighbor_ids, bool with_neighbors,
    std::mt19937_64& rng) {
  std::unordered_set<std::string> allowed(allowed_neighbor_ids.begin(),
                                          allowed_neighbor_ids.end());
  std::vector<BatchItem> items;
  items.reserve(batch_ids.size());
  for (const std::string& id : batch_ids) {
    BatchItem item;
    item.record = &dataset.at(id);
    if (with_neighbors) {
      const std::vector<Neighbor>& row = table.at(id);
      std::vector<const Neighbor*> usable;
      usable.reserve(row.size());
      for (const Neighbor& nb : row) {
        if (nb.id != id && allowed.count(nb.id)) usable.push_back(&nb);
      }
      if (usable.empty()) {
        fail(ErrorKind::EmptyNeighborhood,
             "no usable semantic neighbor for id " + id);
      }
      const Neighbor* pick = usable[uniform_index(rng, usable.size())];
      item.neighbor = &dataset.at(pick->id);
    }
    items.push_back(item);
  }
  return items;
}

namespace {

struct BatchEmbeddings {
  std::vector<EmbeddedPair> pairs;
  std::vector<NeighborAssignment> assignments;
};

// One forward pass per distinct (id, modality) so a neighbor that also sits
// in the batch reuses the same embedding values.
BatchEmbeddings embed_batch(const std::vector<BatchItem>& items,
                            const Encoder& image_encoder,
                            const Encoder& text_encoder,
                            const LossWeights& weights) {
  std::unordered_map<std::string, Vec> image_cache;
  std::unordered_map<std::string, Vec> text_cache;
  const auto image_of = [&](const PairRecord& rec) -> const Vec& {
    auto [it, inserted] = image_cache.try_emplace(rec.id);
    if (inserted) it->second = image_encoder.encode_values(rec.image_feature);
    return it->second;
  };
  const auto text_of = [&](const PairRecord& rec) -> const Vec& {
    auto [it, inserted] = text_cache.try_emplace(rec.id);
    if (inserted) it->second = text_encoder.encode_values(rec.text_feature);
    return it->second;
  };

  BatchEmbeddings out;
  out.pairs.reserve(items.size());
  for (const BatchItem& item : items) {
    out.pairs.push_back(
        {item.record->id, image_of(*item.record), text_of(*item.record)});
  }
  if (weights.alpha_text != 0.0 || weights.beta_img != 0.0) {
    out.assignments.reserve(items.size());
    for (const BatchItem& item : items) {
      NeighborAssignment a;
      a.id = item.neighbor->id;
      if (weights.beta_img != 0.0) a.image = image_of(*item.neighbor);
      if (weights.alpha_text != 0.0) a.text = text_of(*item.neighbor);
      out.assignments.push_back(std::move(a));
    }
  }
  return out;
}

}  // namespace

TrainResult train(const PairDataset& dataset, const NeighborTable& table,
                  const TrainConfig& config) {
  validate(config);
  const SplitSets splits =
      split_dataset(dataset, config.split_ratios, config.seed);
  if (splits.train.size() < 2) {
    fail(ErrorKind::DatasetTooSmall,
         "training split has fewer than two pairs");
  }
  for (const PairRecord& rec : dataset.records) {
    if (!rec.has_text_feature()) {
      fail(ErrorKind::MissingFeatures,
           "record " + rec.id + " lacks a text feature");
    }
  }
  const bool with_neighbors =
      config.weights.alpha_text != 0.0 || config.weights.beta_img != 0.0;

  std::mt19937_64 rng_init = make_rng(config.seed, 1);
  Encoder image_encoder = Encoder::xavier_init(
      Modality::image,
      {dataset.image_dim(), config.hidden_dim, config.embed_dim}, rng_init);
  Encoder text_encoder = Encoder::xavier_init(
      Modality::text, {dataset.text_dim(), config.hidden_dim, config.embed_dim},
      rng_init);
  AdamState adam_image;
  AdamState adam_text;
  AdamConfig adam_cfg{config.learning_rate, 0.9, 0.999, 1e-8,
                      config.weight_decay};

  // Validation neighbor assignments are sampled once so the validation loss
  // stays comparable across epochs.
  std::vector<std::string> val_ids = splits.val;
  std::sort(val_ids.begin(), val_ids.end());
  std::vector<BatchItem> val_items;
  if (!val_ids.empty()) {
    std::mt19937_64 rng_val = make_rng(config.seed, 3);
    val_items = assemble_batch(dataset, table, val_ids, splits.train,
                               with_neighbors, rng_val);
  }
  const bool has_val = val_ids.size() >= 2;

  const auto mean_loss = [&](const std::vector<BatchItem>& items) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t start = 0; start < items.size();
         start += config.batch_size) {
      const std::size_t end =
          std::min(items.size(), start + config.batch_size);
      if (end - start < 2) break;
      const std::vector<BatchItem> slice(items.begin() + start,
                                         items.begin() + end);
      const BatchEmbeddings eb =
          embed_batch(slice, image_encoder, text_encoder, config.weights);
      const LossBundle bundle =
          combined_loss(eb.pairs, eb.assignments, config.weights,
                        config.triplet, config.angular);
      total += bundle.value * static_cast<double>(end - start);
      count += end - start;
    }
    return count ? total / static_cast<double>(count)
                 : std::numeric_limits<double>::quiet_NaN();
  };

  const std::string hash = config_hash(config);
  std::mt19937_64 rng_epoch = make_rng(config.seed, 2);
  std::vector<std::string> train_ids = splits.train;
  double lr = config.learning_rate;
  int decays = 0;
  int epochs_without_improvement = 0;
  double best_monitored = std::numeric_limits<double>::infinity();
  Checkpoint best;
  bool have_best = false;
  std::vector<EpochMetrics> metrics;

  Vec grad_image(image_encoder.params.size());
  Vec grad_text(text_encoder.params.size());
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    adam_cfg.lr = lr;
    shuffle_in_place(train_ids, rng_epoch);
    double train_total = 0.0;
    std::size_t train_count = 0;
    for (std::size_t start = 0; start < train_ids.size();
         start += config.batch_size) {
      const std::size_t end =
          std::min(train_ids.size(), start + config.batch_size);
      if (end - start < 2) break;
      const std::vector<std::string> batch_ids(train_ids.begin() + start,
                                               train_ids.begin() + end);
      const std::vector<BatchItem> items = assemble_batch(
          dataset, table, batch_ids, splits.train, with_neighbors, rng_epoch);
      const BatchEmbeddings eb =
          embed_batch(items, image_encoder, text_encoder, config.weights);
      const LossBundle bundle =
          combined_loss(eb.pairs, eb.assignments, config.weights,
                        config.triplet, config.angular);

      std::fill(grad_image.begin(), grad_image.end(), 0.0);
      std::fill(grad_text.begin(), grad_text.end(), 0.0);
      for (const auto& [key, grad] : bundle.gradients) {
        const PairRecord& rec = dataset.at(key.id);
        if (key.modality == Modality::image) {
          image_encoder.backprop(rec.image_feature, grad, grad_image);
        } else {
          text_encoder.backprop(rec.text_feature, grad, grad_text);
        }
      }
      adam_step(image_encoder.params, grad_image, adam_image, adam_cfg);
      adam_step(text_encoder.params, grad_text, adam_text, adam_cfg);
      train_total += bundle.value * static_cast<double>(end - start);
      train_count += end - start;
    }
    const double train_loss =
        train_count ? train_total / static_cast<double>(train_count)
                    : std::numeric_limits<double>::quiet_NaN();
    const double val_loss =
        has_val ? mean_loss(val_items)
                : std::numeric_limits<double>::quiet_NaN();
    metrics.push_back({epoch, train_loss, val_loss, lr});

    // Without a usable validation split the training loss drives both the
    // best-checkpoint choice and the plateau schedule.
    const double monitored = has_val ? val_loss : train_loss;
    if (!have_best || monitored < best_monitored) {
      best_monitored = monitored;
      best = Checkpoint{image_encoder, text_encoder, adam_image,
                        adam_text,     epoch,        val_loss,
                        hash,          config};
      have_best = true;
      epochs_without_improvement = 0;
    } else {
      ++epochs_without_improvement;
      if (epochs_without_improvement >= config.plateau_patience) {
        if (decays >= config.max_lr_decays) break;
        lr *= config.decay_factor;
        ++decays;
        epochs_without_improvement = 0;
      }
    }
  }
  return TrainResult{std::move(best), std::move(metrics), splits};
}

}  // namespace semloc
