#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "semloc/data.hpp"
#include "semloc/doc2vec.hpp"
#include "semloc/eval.hpp"
#include "semloc/io.hpp"
#include "semloc/neighbors.hpp"
#include "semloc/space.hpp"
#include "semloc/trainer.hpp"

namespace {

using namespace semloc;

Json load_config_file(const std::string& path) {
  if (path.empty()) return Json::object();
  Json j = Json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    fail(ErrorKind::ParseError, path + ": config must be a JSON object");
  }
  return j;
}

struct SynthArgs {
  std::string out;
  std::string corpus_out;
  std::string omega_out;
  std::string config_path;
  SyntheticConfig cfg;
  CLI::Option* topics = nullptr;
  CLI::Option* modes = nullptr;
  CLI::Option* pairs = nullptr;
  CLI::Option* text_dim = nullptr;
  CLI::Option* image_dim = nullptr;
  CLI::Option* sigma_text = nullptr;
  CLI::Option* sigma_image = nullptr;
  CLI::Option* tokens = nullptr;
  CLI::Option* vocab = nullptr;
  CLI::Option* seed = nullptr;
};

SyntheticConfig synth_config_from_json(const Json& j) {
  SyntheticConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "topics") c.topics = value.get<int>();
      else if (key == "modes_per_topic") c.modes_per_topic = value.get<int>();
      else if (key == "pairs") c.pairs = value.get<int>();
      else if (key == "text_dim") c.text_dim = value.get<int>();
      else if (key == "image_dim") c.image_dim = value.get<int>();
      else if (key == "sigma_text") c.sigma_text = value.get<double>();
      else if (key == "sigma_image") c.sigma_image = value.get<double>();
      else if (key == "tokens_per_doc") c.tokens_per_doc = value.get<int>();
      else if (key == "vocab_per_topic") c.vocab_per_topic = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else fail(ErrorKind::ConfigInvalid, "unknown config key: " + key);
    }
  } catch (const Json::exception& e) {
    fail(ErrorKind::ConfigInvalid, std::string("bad config value: ") + e.what());
  }
  return c;
}

int run_synth(SynthArgs& a, const SyntheticConfig& flag_values) {
  SyntheticConfig cfg = synth_config_from_json(load_config_file(a.config_path));
  if (a.topics->count()) cfg.topics = flag_values.topics;
  if (a.modes->count()) cfg.modes_per_topic = flag_values.modes_per_topic;
  if (a.pairs->count()) cfg.pairs = flag_values.pairs;
  if (a.text_dim->count()) cfg.text_dim = flag_values.text_dim;
  if (a.image_dim->count()) cfg.image_dim = flag_values.image_dim;
  if (a.sigma_text->count()) cfg.sigma_text = flag_values.sigma_text;
  if (a.sigma_image->count()) cfg.sigma_image = flag_values.sigma_image;
  if (a.tokens->count()) cfg.tokens_per_doc = flag_values.tokens_per_doc;
  if (a.vocab->count()) cfg.vocab_per_topic = flag_values.vocab_per_topic;
  if (a.seed->count()) cfg.seed = flag_values.seed;

  const PairDataset dataset = generate_synthetic(cfg);
  save_dataset(dataset, a.out);
  if (!a.corpus_out.empty()) save_corpus(dataset, a.corpus_out);
  if (!a.omega_out.empty()) save_space(text_feature_space(dataset), a.omega_out);
  std::cout << Json{{"pairs", dataset.size()}, {"out", a.out}}.dump() << "\n";
  return 0;
}

struct EmbedArgs {
  std::string corpus_path;
  std::string out;
  std::string config_path;
  Doc2VecConfig cfg;
  CLI::Option* dim = nullptr;
  CLI::Option* window = nullptr;
  CLI::Option* min_count = nullptr;
  CLI::Option* epochs = nullptr;
  CLI::Option* lr_start = nullptr;
  CLI::Option* lr_end = nullptr;
  CLI::Option* seed = nullptr;
};

Doc2VecConfig embed_config_from_json(const Json& j) {
  Doc2VecConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "dim") c.dim = value.get<int>();
      else if (key == "window") c.window = value.get<int>();
      else if (key == "min_count") c.min_count = value.get<int>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "lr_start") c.lr_start = value.get<double>();
      else if (key == "lr_end") c.lr_end = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else fail(ErrorKind::ConfigInvalid, "unknown config key: " + key);
    }
  } catch (const Json::exception& e) {
    fail(ErrorKind::ConfigInvalid, std::string("bad config value: ") + e.what());
  }
  return c;
}

Corpus load_corpus_file(const std::string& path) {
  Corpus corpus;
  std::unordered_map<std::string, bool> seen;
  for (const Json& row : read_jsonl(path)) {
    if (!row.is_object() || !row.contains("id") || !row.contains("tokens") ||
        !row["id"].is_string() || !row["tokens"].is_array()) {
      fail(ErrorKind::ParseError, path + ": rows must carry id and tokens");
    }
    TokenDoc doc;
    doc.id = row["id"].get<std::string>();
    if (seen.count(doc.id)) {
      fail(ErrorKind::DuplicateId, path + ": duplicate id " + doc.id);
    }
    seen.emplace(doc.id, true);
    for (const Json& t : row["tokens"]) {
      if (!t.is_string()) {
        fail(ErrorKind::ParseError, path + ": tokens must be strings");
      }
      doc.tokens.push_back(t.get<std::string>());
    }
    corpus.push_back(std::move(doc));
  }
  return corpus;
}

int run_embed_docs(EmbedArgs& a, const Doc2VecConfig& flag_values) {
  Doc2VecConfig cfg = embed_config_from_json(load_config_file(a.config_path));
  if (a.dim->count()) cfg.dim = flag_values.dim;
  if (a.window->count()) cfg.window = flag_values.window;
  if (a.min_count->count()) cfg.min_count = flag_values.min_count;
  if (a.epochs->count()) cfg.epochs = flag_values.epochs;
  if (a.lr_start->count()) cfg.lr_start = flag_values.lr_start;
  if (a.lr_end->count()) cfg.lr_end = flag_values.lr_end;
  if (a.seed->count()) cfg.seed = flag_values.seed;

  const Corpus corpus = load_corpus_file(a.corpus_path);
  const DocModel model = train_pvdm(corpus, cfg);
  save_space(space_from_model(model), a.out);
  std::cout << Json{{"documents", corpus.size()},
                    {"vocabulary", model.vocab.size()},
                    {"out", a.out}}
                   .dump()
            << "\n";
  return 0;
}

struct BuildNeighborsArgs {
  std::string vectors_path;
  std::string features_path;
  std::string source = "";
  std::string out;
  int k = 200;
  std::string mode = "exact";
  std::string metric = "euclidean";
  IndexConfig icfg;
};

int run_build_neighbors(BuildNeighborsArgs& a) {
  if (a.vectors_path.empty() == a.features_path.empty()) {
    fail(ErrorKind::ConfigInvalid,
         "pass exactly one of --vectors and --features");
  }
  SemanticSpace space;
  if (!a.vectors_path.empty()) {
    if (!a.source.empty() && a.source != "text_omega") {
      fail(ErrorKind::ConfigInvalid,
           "--vectors carries the document embedding space (text_omega)");
    }
    space = load_external_space(a.vectors_path);
  } else {
    if (!a.source.empty() && a.source != "image_visual") {
      fail(ErrorKind::ConfigInvalid,
           "--features supplies raw image features (image_visual)");
    }
    const PairDataset dataset = load_dataset(a.features_path);
    space = neighbor_source_variant(dataset, nullptr,
                                    NeighborSource::image_visual);
  }
  IndexConfig cfg = a.icfg;
  cfg.mode = index_mode_from_string(a.mode);
  cfg.metric = metric_from_string(a.metric);
  const NeighborTable table = build_neighbor_table(space, cfg, a.k);
  save_neighbor_table(table, a.out);
  std::cout << Json{{"rows", table.ids.size()}, {"k", table.k}, {"out", a.out}}
                   .dump()
            << "\n";
  return 0;
}

struct TrainArgs {
  std::string features_path;
  std::string corpus_path;
  std::string neighbors_path;
  std::string text_from_omega;
  std::string out_dir;
  std::string config_path;
  TrainConfig cfg;
  std::string base_loss = "angular";
  CLI::Option* seed = nullptr;
  CLI::Option* batch_size = nullptr;
  CLI::Option* lr = nullptr;
  CLI::Option* weight_decay = nullptr;
  CLI::Option* max_epochs = nullptr;
  CLI::Option* alpha = nullptr;
  CLI::Option* beta = nullptr;
  CLI::Option* base = nullptr;
  CLI::Option* margin = nullptr;
  CLI::Option* tan_sq = nullptr;
  CLI::Option* embed_dim = nullptr;
  CLI::Option* hidden_dim = nullptr;
  CLI::Option* patience = nullptr;
  CLI::Option* decay_factor = nullptr;
  CLI::Option* max_decays = nullptr;
};

TrainConfig merge_train_config(TrainArgs& a) {
  TrainConfig cfg = config_from_json(load_config_file(a.config_path));
  if (a.seed->count()) cfg.seed = a.cfg.seed;
  if (a.batch_size->count()) cfg.batch_size = a.cfg.batch_size;
  if (a.lr->count()) cfg.learning_rate = a.cfg.learning_rate;
  if (a.weight_decay->count()) cfg.weight_decay = a.cfg.weight_decay;
  if (a.max_epochs->count()) cfg.max_epochs = a.cfg.max_epochs;
  if (a.alpha->count()) cfg.weights.alpha_text = a.cfg.weights.alpha_text;
  if (a.beta->count()) cfg.weights.beta_img = a.cfg.weights.beta_img;
  if (a.base->count()) cfg.weights.base = base_loss_from_string(a.base_loss);
  if (a.margin->count()) cfg.triplet.margin = a.cfg.triplet.margin;
  if (a.tan_sq->count()) cfg.angular.tan_sq_alpha = a.cfg.angular.tan_sq_alpha;
  if (a.embed_dim->count()) cfg.embed_dim = a.cfg.embed_dim;
  if (a.hidden_dim->count()) cfg.hidden_dim = a.cfg.hidden_dim;
  if (a.patience->count()) cfg.plateau_patience = a.cfg.plateau_patience;
  if (a.decay_factor->count()) cfg.decay_factor = a.cfg.decay_factor;
  if (a.max_decays->count()) cfg.max_lr_decays = a.cfg.max_lr_decays;
  return cfg;
}

PairDataset load_train_dataset(const std::string& features_path,
                               const std::string& corpus_path,
                               const std::string& text_from_omega) {
  PairDataset dataset = load_dataset(features_path, corpus_path);
  if (!text_from_omega.empty()) {
    const SemanticSpace omega = load_external_space(text_from_omega);
    std::vector<PairRecord> records = dataset.records;
    for (PairRecord& rec : records) {
      const Vec* v = omega.find(rec.id);
      if (!v) {
        fail(ErrorKind::IdMismatch,
             "record " + rec.id + " has no vector in " + text_from_omega);
      }
      rec.text_feature = *v;
    }
    dataset = make_dataset(std::move(records));
  }
  return dataset;
}

int run_train(TrainArgs& a) {
  const TrainConfig cfg = merge_train_config(a);
  const PairDataset dataset =
      load_train_dataset(a.features_path, a.corpus_path, a.text_from_omega);
  const NeighborTable table = load_neighbor_table(a.neighbors_path);
  const TrainResult result = train(dataset, table, cfg);

  std::filesystem::create_directories(a.out_dir);
  const std::string ck_path = a.out_dir + "/checkpoint.json";
  const std::string metrics_path = a.out_dir + "/metrics.jsonl";
  save_checkpoint(result.checkpoint, ck_path);
  save_metrics(result.metrics, metrics_path);
  Json summary{{"checkpoint", ck_path},
               {"metrics", metrics_path},
               {"epochs_run", result.metrics.size()},
               {"best_epoch", result.checkpoint.epoch},
               {"config_hash", result.checkpoint.hash}};
  if (std::isfinite(result.checkpoint.best_val_loss)) {
    summary["best_val_loss"] = result.checkpoint.best_val_loss;
  } else {
    summary["best_val_loss"] = nullptr;
  }
  std::cout << summary.dump() << "\n";
  return 0;
}

struct EvalArgs {
  std::string checkpoint_path;
  std::string features_path;
  std::string omega_path;
  std::string out;
  int ways = 5;
  int trials = 1;
  int preservation_k = 200;
  std::uint64_t seed = 0;
};

int run_eval(EvalArgs& a) {
  const Checkpoint ck = load_checkpoint(a.checkpoint_path);
  const PairDataset dataset = load_dataset(a.features_path);
  const SemanticSpace omega = load_external_space(a.omega_path);
  RetrievalTask task;
  task.way_count = a.ways;
  task.trials_per_query = a.trials;
  task.seed = a.seed;
  const std::vector<EvalReport> reports =
      evaluate_checkpoint(ck, dataset, omega, task, a.preservation_k);
  save_reports(reports, a.out);
  Json arr = Json::array();
  for (const EvalReport& r : reports) arr.push_back(report_to_json(r));
  std::cout << arr.dump() << "\n";
  return 0;
}

struct AblateArgs {
  std::string features_path;
  std::string neighbors_path;
  std::string omega_path;
  std::string out_dir;
  std::string config_path;
  int ways = 5;
  int trials = 1;
  int preservation_k = 200;
  std::uint64_t eval_seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::uint64_t train_seed = 0;
};

int run_ablate(AblateArgs& a) {
  TrainConfig base = config_from_json(load_config_file(a.config_path));
  if (a.seed_opt->count()) base.seed = a.train_seed;
  const PairDataset dataset = load_dataset(a.features_path);
  const NeighborTable table = load_neighbor_table(a.neighbors_path);
  const SemanticSpace omega = load_external_space(a.omega_path);
  RetrievalTask task;
  task.way_count = a.ways;
  task.trials_per_query = a.trials;
  task.seed = a.eval_seed;

  const std::vector<AblationRow> rows =
      run_ablation(dataset, table, omega, base, task, a.preservation_k);

  std::filesystem::create_directories(a.out_dir);
  Json table_json = Json::array();
  for (const AblationRow& row : rows) {
    Json entry{{"variant", row.name},
               {"config_hash", config_hash(row.config)},
               {"reports", Json::array()}};
    for (const EvalReport& r : row.reports) {
      entry["reports"].push_back(report_to_json(r));
    }
    table_json.push_back(std::move(entry));
  }
  const std::string out_path = a.out_dir + "/reports.json";
  write_text_file(out_path, table_json.dump(2) + "\n");
  std::cout << table_json.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semantic-locality cross-modal embedding toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "generate a topic-structured synthetic dataset");
  synth_cmd->add_option("--out", synth.out, "features JSONL output")->required();
  synth_cmd->add_option("--corpus-out", synth.corpus_out,
                        "also write a token corpus JSONL");
  synth_cmd->add_option("--omega-out", synth.omega_out,
                        "also write the text features as a vectors JSONL");
  synth_cmd->add_option("--config", synth.config_path, "JSON config file");
  synth.topics = synth_cmd->add_option("--topics", synth.cfg.topics);
  synth.modes = synth_cmd->add_option("--modes", synth.cfg.modes_per_topic);
  synth.pairs = synth_cmd->add_option("--pairs", synth.cfg.pairs);
  synth.text_dim = synth_cmd->add_option("--text-dim", synth.cfg.text_dim);
  synth.image_dim = synth_cmd->add_option("--image-dim", synth.cfg.image_dim);
  synth.sigma_text = synth_cmd->add_option("--sigma-text", synth.cfg.sigma_text);
  synth.sigma_image =
      synth_cmd->add_option("--sigma-image", synth.cfg.sigma_image);
  synth.tokens =
      synth_cmd->add_option("--tokens-per-doc", synth.cfg.tokens_per_doc);
  synth.vocab =
      synth_cmd->add_option("--vocab-per-topic", synth.cfg.vocab_per_topic);
  synth.seed = synth_cmd->add_option("--seed", synth.cfg.seed);

  EmbedArgs embed;
  CLI::App* embed_cmd = app.add_subcommand(
      "embed-docs", "train document vectors over a token corpus");
  embed_cmd->add_option("--corpus", embed.corpus_path, "corpus JSONL")
      ->required();
  embed_cmd->add_option("--out", embed.out, "vectors JSONL output")->required();
  embed_cmd->add_option("--config", embed.config_path, "JSON config file");
  embed.dim = embed_cmd->add_option("--dim", embed.cfg.dim);
  embed.window = embed_cmd->add_option("--window", embed.cfg.window);
  embed.min_count = embed_cmd->add_option("--min-count", embed.cfg.min_count);
  embed.epochs = embed_cmd->add_option("--epochs", embed.cfg.epochs);
  embed.lr_start = embed_cmd->add_option("--lr-start", embed.cfg.lr_start);
  embed.lr_end = embed_cmd->add_option("--lr-end", embed.cfg.lr_end);
  embed.seed = embed_cmd->add_option("--seed", embed.cfg.seed);

  BuildNeighborsArgs bn;
  CLI::App* bn_cmd = app.add_subcommand(
      "build-neighbors", "precompute k-nearest-neighbor tables");
  bn_cmd->add_option("--vectors", bn.vectors_path,
                     "document embedding vectors JSONL");
  bn_cmd->add_option("--features", bn.features_path,
                     "pair features JSONL (visual neighborhoods)");
  bn_cmd->add_option("--source", bn.source, "text_omega or image_visual");
  bn_cmd->add_option("--out", bn.out, "neighbor table JSONL output")->required();
  bn_cmd->add_option("--k", bn.k, "neighbors per row");
  bn_cmd->add_option("--mode", bn.mode, "exact or approximate");
  bn_cmd->add_option("--metric", bn.metric, "euclidean or cosine");
  bn_cmd->add_option("--max-degree", bn.icfg.max_degree);
  bn_cmd->add_option("--build-beam", bn.icfg.build_beam);
  bn_cmd->add_option("--query-beam", bn.icfg.query_beam);
  bn_cmd->add_option("--seed", bn.icfg.seed);

  TrainArgs tr;
  CLI::App* tr_cmd =
      app.add_subcommand("train", "train the joint embedding encoders");
  tr_cmd->add_option("--features", tr.features_path, "pair features JSONL")
      ->required();
  tr_cmd->add_option("--corpus", tr.corpus_path, "optional token corpus JSONL");
  tr_cmd->add_option("--neighbors", tr.neighbors_path, "neighbor table JSONL")
      ->required();
  tr_cmd->add_option("--text-from-omega", tr.text_from_omega,
                     "use these document vectors as text features");
  tr_cmd->add_option("--out-dir", tr.out_dir, "output directory")->required();
  tr_cmd->add_option("--config", tr.config_path, "JSON config file");
  tr.seed = tr_cmd->add_option("--seed", tr.cfg.seed);
  tr.batch_size = tr_cmd->add_option("--batch-size", tr.cfg.batch_size);
  tr.lr = tr_cmd->add_option("--lr", tr.cfg.learning_rate);
  tr.weight_decay = tr_cmd->add_option("--weight-decay", tr.cfg.weight_decay);
  tr.max_epochs = tr_cmd->add_option("--max-epochs", tr.cfg.max_epochs);
  tr.alpha = tr_cmd->add_option("--alpha", tr.cfg.weights.alpha_text);
  tr.beta = tr_cmd->add_option("--beta", tr.cfg.weights.beta_img);
  tr.base = tr_cmd->add_option("--base", tr.base_loss, "triplet or angular");
  tr.margin = tr_cmd->add_option("--margin", tr.cfg.triplet.margin);
  tr.tan_sq = tr_cmd->add_option("--tan-sq-alpha", tr.cfg.angular.tan_sq_alpha);
  tr.embed_dim = tr_cmd->add_option("--embed-dim", tr.cfg.embed_dim);
  tr.hidden_dim = tr_cmd->add_option("--hidden-dim", tr.cfg.hidden_dim);
  tr.patience = tr_cmd->add_option("--patience", tr.cfg.plateau_patience);
  tr.decay_factor = tr_cmd->add_option("--decay-factor", tr.cfg.decay_factor);
  tr.max_decays = tr_cmd->add_option("--max-lr-decays", tr.cfg.max_lr_decays);

  EvalArgs ev;
  CLI::App* ev_cmd =
      app.add_subcommand("eval", "evaluate a checkpoint on its test split");
  ev_cmd->add_option("--checkpoint", ev.checkpoint_path)->required();
  ev_cmd->add_option("--features", ev.features_path)->required();
  ev_cmd->add_option("--omega", ev.omega_path, "reference vectors JSONL")
      ->required();
  ev_cmd->add_option("--out", ev.out, "report JSON output")->required();
  ev_cmd->add_option("--ways", ev.ways);
  ev_cmd->add_option("--trials", ev.trials);
  ev_cmd->add_option("--preservation-k", ev.preservation_k);
  ev_cmd->add_option("--seed", ev.seed);

  AblateArgs ab;
  CLI::App* ab_cmd = app.add_subcommand(
      "ablate", "retrain with each neighborhood term removed");
  ab_cmd->add_option("--features", ab.features_path)->required();
  ab_cmd->add_option("--neighbors", ab.neighbors_path)->required();
  ab_cmd->add_option("--omega", ab.omega_path)->required();
  ab_cmd->add_option("--out-dir", ab.out_dir)->required();
  ab_cmd->add_option("--config", ab.config_path, "JSON config file");
  ab_cmd->add_option("--ways", ab.ways);
  ab_cmd->add_option("--trials", ab.trials);
  ab_cmd->add_option("--preservation-k", ab.preservation_k);
  ab_cmd->add_option("--eval-seed", ab.eval_seed);
  ab.seed_opt = ab_cmd->add_option("--seed", ab.train_seed, "training seed");

  try {
    app.parse(argc, argv);
    if (synth_cmd->parsed()) return run_synth(synth, synth.cfg);
    if (embed_cmd->parsed()) return run_embed_docs(embed, embed.cfg);
    if (bn_cmd->parsed()) return run_build_neighbors(bn);
    if (tr_cmd->parsed()) return run_train(tr);
    if (ev_cmd->parsed()) return run_eval(ev);
    if (ab_cmd->parsed()) return run_ablate(ab);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << Json{{"error", to_string(e.kind())}, {"message", e.what()}}
                     .dump()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << Json{{"error", "Internal"}, {"message", e.what()}}.dump()
              << "\n";
    return 1;
  }
}
