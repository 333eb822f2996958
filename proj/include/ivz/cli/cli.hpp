#pragma once

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ivz/io/checkpoint.hpp"
#include "ivz/io/synth.hpp"
#include "ivz/service/service.hpp"
#include "ivz/train/grad_suite.hpp"

namespace ivz::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0, kExitUsage = 1, kExitData = 2;

/// "3,5,8" -> {3, 5, 8}; also accepts a JSON array.
inline std::vector<std::size_t> parse_index_csv(const std::string& text, const char* field) {
  std::string s = text;
  if (!s.empty() && s.front() == '[') {
    try {
      return eval::index_list(nlohmann::json::parse(s), field);
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::Input, std::string(field) + " is not a JSON index list");
    }
  }
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    require(!item.empty() && item.size() < 10 &&
                std::all_of(item.begin(), item.end(), [](char c) { return c >= '0' && c <= '9'; }),
            ErrorCode::Input, std::string(field) + " entry '" + item + "' is not a nonnegative integer");
    out.push_back(std::stoul(item));
  }
  return out;
}

/// A checkpoint argument is a path if one exists there, otherwise an id under <data-dir>/checkpoints.
inline fs::path resolve_checkpoint(const std::string& arg, const fs::path& data_dir) {
  if (fs::exists(arg)) return arg;
  const fs::path p = data_dir / "checkpoints" / (arg + ".ivzr");
  require(fs::exists(p), ErrorCode::NotFound, "unknown checkpoint '" + arg + "'");
  return p;
}

struct Options {
  std::string data_dir = "data";
  std::string checkpoint, video, c1, c2, shots, summary, mask, config, bind = "127.0.0.1:8080", input, record;
  std::string init_from, query = "text";
  std::optional<std::size_t> budget, epochs;
  std::optional<double> threshold;
  double delta = model::kDefaultDelta;
  std::uint64_t seed = 42, grad_seed = 7;
  std::size_t videos = 4, shot_count = 256, dim = 64, vocab = 16, rules = 4, k = querygen::kDefaultQueryShots;
  std::size_t cache_size = 256;
  bool freeze_summary = false;
};

namespace detail {

inline service::Query query_from(const Options& o) {
  service::Query q;
  if (!o.shots.empty()) {
    require(o.c1.empty() && o.c2.empty(), ErrorCode::Input, "give either --c1/--c2 or --shots, not both");
    q.kind = model::QueryKind::Visual;
    q.shots = parse_index_csv(o.shots, "shots");
  } else {
    require(!o.c1.empty() && !o.c2.empty(), ErrorCode::Input, "a text query needs both --c1 and --c2");
    q.c1 = o.c1;
    q.c2 = o.c2;
  }
  return q;
}

inline std::optional<io::EmbeddingTable> maybe_vocab(const fs::path& dir) {
  if (fs::exists(dir / "embeddings.json")) return io::load_embeddings(dir);
  return std::nullopt;
}

inline int cmd_synth(const Options& o, std::ostream& out) {
  io::SynthConfig c;
  c.seed = o.seed;
  c.videos = o.videos;
  c.shots = o.shot_count;
  c.feature_dim = o.dim;
  c.vocab = o.vocab;
  c.rules = o.rules;
  const io::Dataset d = io::write_synth_dataset(o.data_dir, c);
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& v : d.videos) ids.push_back(v.id);
  out << nlohmann::json{{"data_dir", o.data_dir}, {"videos", ids}, {"train", d.train_ids}, {"test", d.test_ids},
                        {"rules", d.info.at("rules")}, {"audit", d.info.at("audit")}}
             .dump()
      << '\n';
  return kExitOk;
}

inline int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const io::Dataset d = io::load_dataset(o.data_dir);
  require(!d.videos.empty(), ErrorCode::Input, "dataset has no videos");
  nlohmann::json cfg_json = nlohmann::json::object();
  if (!o.config.empty()) cfg_json = io::read_json(o.config);
  train::TrainConfig tc = cfg_json.value("train", nlohmann::json::object()).get<train::TrainConfig>();
  if (o.epochs) tc.epochs = *o.epochs;
  tc.seed = o.seed;
  tc.delta = o.delta;
  tc.freeze_summary = tc.freeze_summary || o.freeze_summary;

  const std::size_t dim = d.videos.front().dim;
  model::Model<float> m = [&] {
    if (!o.init_from.empty()) return io::model_from_checkpoint<float>(io::load_checkpoint(resolve_checkpoint(o.init_from, o.data_dir)));
    nlohmann::json mj = cfg_json.value("model", nlohmann::json{{"preset", "compact"}});
    if (!mj.contains("word_dim")) mj["word_dim"] = d.embeddings.dim;
    model::Model<float> fresh(model::model_config_from_json(mj, dim));
    fresh.init(o.seed);
    return fresh;
  }();

  const auto videos = io::train_videos<float>(d);
  require(o.query == "text" || o.query == "visual", ErrorCode::Input, "--query must be text or visual");
  const bool visual = o.query == "visual";
  const auto train_set = visual ? io::visual_samples<float>(d, d.train_ids) : io::text_samples<float>(d, d.train_ids);
  const auto held_out = visual ? io::visual_samples<float>(d, d.test_ids) : io::text_samples<float>(d, d.test_ids);
  const auto record = train::train(m, videos, train_set, held_out, tc, [&](const train::EpochRecord& r) {
    err << nlohmann::json{{"event", "epoch"}, {"epoch", r.epoch}, {"lr", r.lr}, {"loss", r.loss}, {"f1", r.eval.f1}}.dump()
        << '\n';
  });

  const fs::path ckpt = o.checkpoint.empty() ? fs::path(o.data_dir) / "checkpoints" / "model.ivzr" : fs::path(o.checkpoint);
  nlohmann::json meta = {{"train", tc}, {"query", o.query}, {"samples", train_set.size()}};
  if (!o.init_from.empty()) meta["init_from"] = o.init_from;
  io::save_checkpoint(ckpt, m, meta);
  nlohmann::json result = {{"checkpoint", ckpt.string()},
                           {"record", record},
                           {"held_out_queries", held_out.size()},
                           {"random_baseline_f1", held_out.empty() ? 0.0 : train::random_baseline_f1(videos, held_out, 1000, o.seed)}};
  if (!o.record.empty()) io::write_json(o.record, result);
  out << result.dump() << '\n';
  return kExitOk;
}

inline int cmd_infer(const Options& o, std::ostream& out) {
  const fs::path path = resolve_checkpoint(o.checkpoint, o.data_dir);
  const auto m = io::model_from_checkpoint<float>(io::load_checkpoint(path));
  const auto v = io::load_video(fs::path(o.data_dir) / "videos", o.video);
  const auto vocab = maybe_vocab(o.data_dir);
  const auto q = query_from(o);
  if (q.kind == model::QueryKind::Visual) model::validate_visual_query(model::VisualQuery{q.shots}, v.shots);
  out << service::run_inference(m, v, q, vocab ? &*vocab : nullptr, o.delta, path.stem().string()) << '\n';
  return kExitOk;
}

inline int cmd_eval(const Options& o, std::ostream& out) {
  if (!o.input.empty()) {
    // Self-contained request: {pred, gt, tags, mask?}
    const auto r = eval::parse_eval_request(io::read_json(o.input));
    out << eval::eval_result_json(eval::evaluate_summary(r.pred, r.gt, r.tags, r.mask)) << '\n';
    return kExitOk;
  }
  require(!o.video.empty(), ErrorCode::Input, "eval needs --input or --video");
  const auto v = io::load_video(fs::path(o.data_dir) / "videos", o.video);
  const auto mask = o.mask.empty() ? std::vector<std::size_t>{} : parse_index_csv(o.mask, "mask");
  if (o.checkpoint.empty()) {
    const auto summary = o.summary.empty() ? std::vector<std::size_t>{} : parse_index_csv(o.summary, "summary");
    out << service::evaluate_body(v, summary, mask, o.c1, o.c2) << '\n';
    return kExitOk;
  }
  // Predict, mix, select, then score against the ground truth of the same query.
  const auto m = io::model_from_checkpoint<float>(io::load_checkpoint(resolve_checkpoint(o.checkpoint, o.data_dir)));
  const auto vocab = maybe_vocab(o.data_dir);
  const auto q = query_from(o);
  const Tensor<float> g = service::intent_probs(m, v.features, q, vocab ? &*vocab : nullptr);
  const Tensor<float> score = model::mix_scores(g, m.summary.forward(v.features), static_cast<float>(o.delta));
  require(!(o.budget && o.threshold), ErrorCode::Input, "give either --budget or --threshold");
  const model::Selection sel = o.threshold ? model::Selection::by_threshold(*o.threshold)
                               : o.budget  ? model::Selection::by_budget(*o.budget)
                                           : model::Selection::default_for(v.shots);
  const auto pred = model::select_summary<float>(score.values(), sel);
  const auto& gt = service::ground_truth(v, q.kind == model::QueryKind::Text ? q.c1 : o.c1,
                                         q.kind == model::QueryKind::Text ? q.c2 : o.c2);
  const auto query_mask = q.kind == model::QueryKind::Visual ? q.shots : mask;
  const auto r = eval::evaluate_summary(pred, gt.summary, v.tags, query_mask);
  out << "{\"precision\":" << eval::fixed6(r.precision) << ",\"recall\":" << eval::fixed6(r.recall)
      << ",\"f1\":" << eval::fixed6(r.f1) << ",\"summary\":" << nlohmann::json(pred).dump() << "}\n";
  return kExitOk;
}

inline int cmd_querygen(const Options& o, std::ostream& out) {
  std::vector<std::size_t> summary;
  std::vector<eval::TagSet> tags;
  if (!o.input.empty()) {
    const auto j = io::read_json(o.input);
    summary = eval::index_list(j.at("summary"), "summary");
    tags = eval::tag_lists(j.at("tags"));
  } else {
    require(!o.video.empty(), ErrorCode::Input, "querygen needs --input or --video");
    const auto v = io::load_video(fs::path(o.data_dir) / "videos", o.video);
    summary = o.summary.empty() ? service::ground_truth(v, o.c1, o.c2).summary : parse_index_csv(o.summary, "summary");
    tags = v.tags;
  }
  out << nlohmann::json{{"shots", querygen::generate_visual_query(summary, tags, o.k)}}.dump() << '\n';
  return kExitOk;
}

inline int cmd_gradcheck(const Options& o, std::ostream& out) {
  const auto entries = train::run_grad_suite(o.grad_seed);
  nlohmann::json list = nlohmann::json::array();
  double worst = 0;
  for (const auto& e : entries) {
    list.push_back({{"name", e.name}, {"max_relative_error", e.max_relative_error}, {"coordinates", e.coordinates}});
    worst = std::max(worst, e.max_relative_error);
  }
  const bool pass = worst < 1e-4;
  out << nlohmann::json{{"entries", list}, {"worst_relative_error", worst}, {"pass", pass}}.dump() << '\n';
  return pass ? kExitOk : kExitData;
}

inline int cmd_serve(const Options& o, std::ostream& err) {
  service::ServiceConfig c = service::config_from_env();
  c.data_dir = o.data_dir;
  const auto colon = o.bind.rfind(':');
  require(colon != std::string::npos, ErrorCode::Input, "--bind must be host:port");
  c.host = o.bind.substr(0, colon);
  c.port = std::stoi(o.bind.substr(colon + 1));
  c.cache_size = o.cache_size;
  c.delta = o.delta;
  return service::serve(c, err);
}

}  // namespace detail

/// Runs one subcommand. JSON goes to `out`; usage text and diagnostics go to `err`.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Query-guided video summarization toolkit", "ivz"};
  app.require_subcommand(1, 1);
  Options o;

  auto data = [&](CLI::App* s) { s->add_option("--data-dir", o.data_dir, "Dataset directory"); };
  auto seed = [&](CLI::App* s) { s->add_option("--seed", o.seed, "Random seed"); };
  auto query = [&](CLI::App* s) {
    s->add_option("--c1", o.c1, "First query concept");
    s->add_option("--c2", o.c2, "Second query concept");
    s->add_option("--shots", o.shots, "Visual query shots, e.g. 3,5,8");
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  data(synth);
  seed(synth);
  synth->add_option("--videos", o.videos, "Number of videos");
  synth->add_option("--shot-count", o.shot_count, "Shots per video");
  synth->add_option("--dim", o.dim, "Feature dimension");
  synth->add_option("--vocab", o.vocab, "Concept vocabulary size");
  synth->add_option("--rules", o.rules, "Planted concept-pair rules");

  auto* trn = app.add_subcommand("train", "Train a model and write a checkpoint");
  data(trn);
  seed(trn);
  trn->add_option("--checkpoint", o.checkpoint, "Output checkpoint path");
  trn->add_option("--config", o.config, "JSON file with optional 'model' and 'train' objects");
  trn->add_option("--epochs", o.epochs, "Override the epoch count");
  trn->add_option("--delta", o.delta, "Mixing threshold");
  trn->add_option("--query", o.query, "text or visual")->check(CLI::IsMember({"text", "visual"}));
  trn->add_option("--init-from", o.init_from, "Start from this checkpoint");
  trn->add_flag("--freeze-summary", o.freeze_summary, "Train the intent module only");
  trn->add_option("--record", o.record, "Also write the training record here");

  auto* inf = app.add_subcommand("infer", "Intent probabilities and per-intent shot scores");
  data(inf);
  inf->add_option("--checkpoint", o.checkpoint, "Checkpoint path or id")->required();
  inf->add_option("--video", o.video, "Video id")->required();
  inf->add_option("--delta", o.delta, "Mixing threshold reported with the scores");
  query(inf);

  auto* ev = app.add_subcommand("eval", "Evaluate a summary against ground truth");
  data(ev);
  ev->add_option("--input", o.input, "Request JSON {pred, gt, tags, mask?}");
  ev->add_option("--video", o.video, "Video id");
  ev->add_option("--summary", o.summary, "Summary shots, e.g. 1,4,9");
  ev->add_option("--mask", o.mask, "Shots excluded from evaluation");
  ev->add_option("--checkpoint", o.checkpoint, "Predict the summary with this checkpoint");
  ev->add_option("--budget", o.budget, "Select the top N mixed scores");
  ev->add_option("--threshold", o.threshold, "Select shots whose mixed score exceeds this");
  ev->add_option("--delta", o.delta, "Mixing threshold");
  query(ev);

  auto* qg = app.add_subcommand("querygen", "Visual query shots from a summary");
  data(qg);
  qg->add_option("--input", o.input, "JSON {summary, tags}");
  qg->add_option("--video", o.video, "Video id (uses its ground truth)");
  qg->add_option("--summary", o.summary, "Summary shots");
  qg->add_option("--c1", o.c1, "Ground-truth query concept");
  qg->add_option("--c2", o.c2, "Ground-truth query concept");
  qg->add_option("-k,--count", o.k, "Number of query shots");

  auto* srv = app.add_subcommand("serve", "Run the HTTP service");
  data(srv);
  srv->add_option("--bind", o.bind, "host:port");
  srv->add_option("--cache-size", o.cache_size, "Cached responses");
  srv->add_option("--delta", o.delta, "Mixing threshold reported with the scores");

  auto* gc = app.add_subcommand("gradcheck", "Run the finite-difference gradient suite");
  gc->add_option("--seed", o.grad_seed, "Random seed");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  try {
    if (synth->parsed()) return detail::cmd_synth(o, out);
    if (trn->parsed()) return detail::cmd_train(o, out, err);
    if (inf->parsed()) return detail::cmd_infer(o, out);
    if (ev->parsed()) return detail::cmd_eval(o, out);
    if (qg->parsed()) return detail::cmd_querygen(o, out);
    if (srv->parsed()) return detail::cmd_serve(o, err);
    if (gc->parsed()) return detail::cmd_gradcheck(o, out);
  } catch (const Error& e) {
    err << nlohmann::json{{"error", {{"code", to_string(e.code())}, {"message", e.what()}}}}.dump() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << nlohmann::json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace ivz::cli
