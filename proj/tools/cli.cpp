#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "crystclr/checkpoint.hpp"
#include "crystclr/config.hpp"
#include "crystclr/dataset.hpp"
#include "crystclr/errors.hpp"
#include "crystclr/synthetic.hpp"
#include "crystclr/trainer.hpp"

namespace crystclr::cli {
namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path + ": cannot open for writing");
  out << text;
  if (!out) throw DataError(path + ": write failed");
}

TrainConfig checked_config(const std::string& path) {
  TrainConfig cfg = load_train_config(path);
  try {
    cfg.validate();
  } catch (const InvariantError& e) {
    throw InvariantError(path + ": " + e.what());
  }
  return cfg;
}

int cmd_pretrain(const std::string& config_path, const std::string& manifest, std::ostream& out) {
  const TrainConfig cfg = checked_config(config_path);
  const Dataset data = load_dataset(manifest);
  out << "pretraining on " << data.size() << " structures: epochs=" << cfg.epochs
      << " batch_size=" << cfg.batch_size << " tau=" << cfg.loss.tau
      << " use_cs=" << (cfg.loss.use_cs ? "true" : "false") << " seed=" << cfg.seed << "\n";
  const std::string checkpoint = pretrain(cfg, data);
  out << "wrote " << cfg.log_path << " and " << checkpoint << "\n";
  return kOk;
}

int cmd_embed(const std::string& checkpoint, const std::string& manifest, const std::string& output,
              bool with_z, std::ostream& out) {
  const Dataset data = load_dataset(manifest);
  const EmbeddingTable table = embed_dataset(checkpoint, data, with_z);
  write_embeddings_csv(table, output);
  out << "embedded " << table.size() << " structures into " << output << "\n";
  return kOk;
}

int cmd_probe(const std::string& embeddings, const std::string& manifest, const std::string& output,
              std::uint64_t seed, double lambda, const std::string& property, std::ostream& out) {
  const Dataset data = load_dataset(manifest);
  const EmbeddingTable table = read_embeddings_csv(embeddings);
  const ProbeResult result = probe_embeddings(table, data, seed, lambda, property);
  write_text(output, probe_result_csv(result));
  out << property << ": test MAE " << format_double(result.mae) << " (train " << result.n_train
      << ", validation " << result.n_validation << ", test " << result.n_test << ")\n";
  return kOk;
}

int cmd_augstudy(const std::string& config_path, const std::string& manifest,
                 const std::string& output, std::ostream& out) {
  const TrainConfig cfg = checked_config(config_path);
  const Dataset data = load_dataset(manifest);
  const StudyResult result =
      augmentation_study(cfg, data, [&](Transform a, Transform b, double mae) {
        out << "  " << transform_name(a) << " + " << transform_name(b) << ": MAE "
            << format_double(mae) << "\n"
            << std::flush;
      });
  write_text(output, study_csv(result));
  out << "trained " << result.models_trained << " models; wrote " << output << "\n";
  return kOk;
}

int cmd_validate(const std::string& manifest, std::ostream& out, std::ostream& err) {
  std::size_t ok = 0;
  std::size_t bad = 0;
  std::set<std::string> ids;
  for (const ManifestEntry& entry : read_manifest(manifest)) {
    const std::string where = manifest + ":" + std::to_string(entry.line);
    try {
      const CrystalStructure s = read_structure_file(entry.path);
      if (!ids.insert(s.id()).second) throw DataError("duplicate structure id '" + s.id() + "'");
      ++ok;
    } catch (const DataError& e) {
      err << where << ": " << e.what() << "\n";
      ++bad;
    }
  }
  out << "validated " << ok + bad << " structures: " << ok << " ok, " << bad << " with errors\n";
  return bad == 0 ? kOk : kDataError;
}

int cmd_synth(const std::string& directory, std::size_t count, std::uint64_t seed, std::ostream& out) {
  const Dataset data = synthetic_corpus(count, seed);
  const std::string manifest = write_corpus(data, directory);
  out << "wrote " << count << " structures and " << manifest << "\n";
  return kOk;
}

}  // namespace

int run(std::span<const std::string> argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contrastive pretraining of crystal graph encoders", "crystclr"};
  app.require_subcommand(1);
  app.footer("Training configuration keys (JSON, nested by section) and defaults:\n" +
             config_reference() + "\nEnvironment: CRYSTCLR_THREADS caps worker threads.\n"
             "Exit codes: 0 ok, 1 usage, 2 data/config error, 3 numerical failure.");

  std::string config;
  std::string manifest;
  std::string checkpoint;
  std::string embeddings;
  std::string output;
  std::string property = "target";
  bool with_z = false;
  std::uint64_t seed = 0;
  double lambda = kDefaultRidgeLambda;
  std::size_t count = 50;

  auto* pretrain_cmd = app.add_subcommand("pretrain", "Contrastive pretraining; writes log and checkpoint");
  pretrain_cmd->add_option("--config", config, "Training configuration JSON")->required();
  pretrain_cmd->add_option("--manifest", manifest, "Structure manifest")->required();

  auto* embed_cmd = app.add_subcommand("embed", "Embed unaugmented structures with a checkpoint");
  embed_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  embed_cmd->add_option("--manifest", manifest, "Structure manifest")->required();
  embed_cmd->add_option("--out", output, "Embedding CSV to write")->required();
  embed_cmd->add_flag("--with-z", with_z, "Also export the projection-head outputs");

  auto* probe_cmd = app.add_subcommand("probe", "Ridge linear probe on exported embeddings");
  probe_cmd->add_option("--embeddings", embeddings, "Embedding CSV")->required();
  probe_cmd->add_option("--manifest", manifest, "Manifest with target values")->required();
  probe_cmd->add_option("--out", output, "Probe result CSV to write")->required();
  probe_cmd->add_option("--seed", seed, "Split seed")->capture_default_str();
  probe_cmd->add_option("--lambda", lambda, "Ridge regulariser")->capture_default_str();
  probe_cmd->add_option("--property", property, "Property name for the report")->capture_default_str();

  auto* study_cmd = app.add_subcommand("augstudy", "Pairwise augmentation study (4x4 MAE grid)");
  study_cmd->add_option("--config", config, "Base training configuration JSON")->required();
  study_cmd->add_option("--manifest", manifest, "Manifest with target values")->required();
  study_cmd->add_option("--out", output, "Study CSV to write")->required();

  auto* validate_cmd = app.add_subcommand("validate", "Parse every structure and report problems");
  validate_cmd->add_option("--manifest", manifest, "Structure manifest")->required();

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic prototype corpus with targets");
  synth_cmd->add_option("--out", output, "Output directory")->required();
  synth_cmd->add_option("--count", count, "Number of structures")->capture_default_str();
  synth_cmd->add_option("--seed", seed, "Corpus seed")->capture_default_str();

  std::vector<std::string> args(argv.begin(), argv.end());
  if (args.empty()) args.emplace_back("crystclr");
  std::vector<const char*> cargs;
  for (const auto& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run 'crystclr --help' for usage\n";
    return kUsageError;
  }

  try {
    if (*pretrain_cmd) return cmd_pretrain(config, manifest, out);
    if (*embed_cmd) return cmd_embed(checkpoint, manifest, output, with_z, out);
    if (*probe_cmd) return cmd_probe(embeddings, manifest, output, seed, lambda, property, out);
    if (*study_cmd) return cmd_augstudy(config, manifest, output, out);
    if (*validate_cmd) return cmd_validate(manifest, out, err);
    if (*synth_cmd) return cmd_synth(output, count, seed, out);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}

}  // namespace crystclr::cli
