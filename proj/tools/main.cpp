// Command-line front end for the loop-mapping and cycle-estimation pipeline:
//   parse-disasm -> extract-loops -> map -> build-lib -> estimate -> fit ->
//   predict -> eval
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "instmeter/cfg.hpp"
#include "instmeter/dataset.hpp"
#include "instmeter/disasm.hpp"
#include "instmeter/errors.hpp"
#include "instmeter/instlib.hpp"
#include "instmeter/io.hpp"
#include "instmeter/mapper.hpp"
#include "instmeter/model.hpp"
#include "instmeter/predictor.hpp"
#include "instmeter/srcfeat.hpp"

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string hex_addr(std::uint64_t addr) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(addr));
  return buf;
}

json load_json(const std::string& path) {
  try {
    return json::parse(instmeter::read_text_file(path));
  } catch (const json::exception& e) {
    throw instmeter::DataError("while reading '" + path + "': " + e.what());
  }
}

void emit_json(const json& j, const std::string& out_path) {
  std::string text = j.dump(2);
  text += '\n';
  if (out_path.empty())
    std::cout << text;
  else
    instmeter::write_text_file_atomic(out_path, text);
}

const instmeter::BinFunction& find_function(const instmeter::ParsedListing& listing,
                                            const std::string& symbol) {
  for (const instmeter::BinFunction& f : listing.functions)
    if (f.symbol == symbol) return f;
  std::string known;
  for (const instmeter::BinFunction& f : listing.functions) {
    if (!known.empty()) known += ", ";
    known += f.symbol;
  }
  throw instmeter::DataError("function '" + symbol + "' not found in listing (have: " + known +
                             ")");
}

struct EvalRow {
  std::string model_id;
  double cycles;
  double truth;
  double predicted;
  double rel_err;
};

json percentile_block(const std::vector<double>& errs) {
  return json{{"p50", instmeter::percentile(errs, 50.0)},
              {"p90", instmeter::percentile(errs, 90.0)},
              {"p95", instmeter::percentile(errs, 95.0)}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "instmeter: loop mapping between source and disassembly CFGs, per-kernel "
      "cycle profiles, whole-model cycle estimates, and few-shot energy/latency "
      "predictors"};
  app.require_subcommand(1);

  std::uint64_t seed = 42;
  if (const char* env = std::getenv("INSTMETER_SEED")) {
    std::uint64_t v = 0;
    const char* end = env + std::string_view(env).size();
    auto [ptr, ec] = std::from_chars(env, end, v);
    if (ec != std::errc{} || ptr != end) {
      std::cerr << "error: INSTMETER_SEED must be an unsigned integer, got '" << env << "'\n";
      return 1;
    }
    seed = v;
  }

  std::string arch_name = "cortex-m";
  std::string out_path;
  bool verbose = false;
  auto add_common = [&](CLI::App* sub, bool with_arch, bool with_seed) {
    sub->add_option("--out", out_path, "Write the result here instead of stdout");
    sub->add_flag("--verbose", verbose, "Chattier output");
    if (with_arch)
      sub->add_option("--arch", arch_name, "Instruction set of the listing")
          ->check(CLI::IsMember({"cortex-m", "riscv"}));
    if (with_seed)
      sub->add_option("--seed", seed, "Seed for every randomized step")
          ->capture_default_str();
  };

  // parse-disasm
  std::string in_path;
  CLI::App* parse_cmd = app.add_subcommand(
      "parse-disasm", "Parse a disassembly listing into per-function CFGs and loops");
  parse_cmd->add_option("--in", in_path, "Disassembly listing")->required();
  add_common(parse_cmd, true, false);

  // extract-loops
  std::string cfg_path;
  CLI::App* loops_cmd = app.add_subcommand(
      "extract-loops", "Extract natural loops and their relation graph from a CFG file");
  loops_cmd->add_option("--cfg", cfg_path, "CFG document (JSON)")->required();
  add_common(loops_cmd, false, false);

  // map
  std::string src_path, bin_path, function_name;
  CLI::App* map_cmd = app.add_subcommand(
      "map", "Map source loops onto disassembly loops for one kernel function");
  map_cmd->add_option("--src", src_path, "Source-side CFG document (JSON)")->required();
  map_cmd->add_option("--bin", bin_path, "Disassembly listing")->required();
  map_cmd->add_option("--function", function_name,
                      "Symbol in the listing (defaults to the source function name)");
  add_common(map_cmd, true, true);

  // build-lib
  std::string spec_path, cpi_path, version_tag;
  CLI::App* lib_cmd = app.add_subcommand(
      "build-lib", "Map every kernel in a manifest and assemble the instruction library");
  lib_cmd->add_option("--spec", spec_path, "Kernel manifest (JSON)")->required();
  lib_cmd->add_option("--bin", bin_path, "Disassembly listing")->required();
  lib_cmd->add_option("--cpi", cpi_path, "Cycles-per-instruction table (JSON)");
  lib_cmd->add_option("--tag", version_tag, "Kernel-source version tag stored in the library");
  add_common(lib_cmd, true, true);

  // estimate
  std::string model_path, lib_path;
  CLI::App* est_cmd = app.add_subcommand(
      "estimate", "Estimate total cycles of a model descriptor against a library");
  est_cmd->add_option("--model", model_path, "Model descriptor (JSON)")->required();
  est_cmd->add_option("--lib", lib_path, "Instruction library (JSON)")->required();
  add_common(est_cmd, false, false);

  // fit
  std::string dataset_path, target, method = "few-shot";
  CLI::App* fit_cmd = app.add_subcommand(
      "fit", "Fit a linear cycles->cost predictor from a measurement table");
  fit_cmd->add_option("--dataset", dataset_path, "Measurement CSV")->required();
  fit_cmd->add_option("--target", target, "Cost to predict")
      ->check(CLI::IsMember({"energy", "latency"}))
      ->required();
  fit_cmd->add_option("--method", method, "Fitting protocol")
      ->check(CLI::IsMember({"few-shot", "ols"}))
      ->capture_default_str();
  add_common(fit_cmd, false, true);

  // predict
  std::string predictor_path;
  double cycles_value = 0.0;
  CLI::App* pred_cmd =
      app.add_subcommand("predict", "Apply a fitted predictor to a cycle count");
  pred_cmd->add_option("--predictor", predictor_path, "Predictor file (JSON)")->required();
  pred_cmd->add_option("--cycles", cycles_value, "Estimated cycle count")->required();
  add_common(pred_cmd, false, false);

  // eval
  std::string eval_prefix;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Evaluate prediction error over a measurement table (CSV + JSON reports)");
  eval_cmd->add_option("--dataset", dataset_path, "Measurement CSV")->required();
  eval_cmd->add_option("--target", target, "Cost to evaluate")
      ->check(CLI::IsMember({"energy", "latency"}))
      ->required();
  eval_cmd->add_option("--predictor", predictor_path,
                       "Evaluate this predictor over every row; when absent, run the "
                       "seeded few-shot protocol and evaluate on the held-out rows");
  eval_cmd->add_option("--out", eval_prefix, "Report prefix: writes <prefix>.csv and <prefix>.json")
      ->required();
  eval_cmd->add_flag("--verbose", verbose, "Chattier output");
  eval_cmd->add_option("--seed", seed, "Seed for the few-shot protocol")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const instmeter::ArchSpec& arch = instmeter::ArchSpec::by_name(arch_name);

    if (*parse_cmd) {
      std::string text = instmeter::read_text_file(in_path);
      instmeter::ParsedListing listing = instmeter::parse_disasm(text);
      json out;
      out["architecture"] = arch_name;
      out["skipped_lines"] = listing.skipped_lines;
      out["functions"] = json::array();
      for (const instmeter::BinFunction& fn : listing.functions) {
        instmeter::BinCfg bc = instmeter::build_bin_cfg(fn, arch);
        json fj;
        fj["symbol"] = fn.symbol;
        fj["start"] = hex_addr(fn.start);
        fj["instruction_count"] = fn.instructions.size();
        fj["cfg"] = instmeter::cfg_to_json(bc.cfg);
        fj["loops"] = instmeter::loops_to_json(instmeter::extract_loops(bc.cfg));
        fj["dropped_edges"] = json::array();
        for (const auto& [from, to] : bc.dropped_edges)
          fj["dropped_edges"].push_back({{"from", hex_addr(from)}, {"to", hex_addr(to)}});
        out["functions"].push_back(std::move(fj));
      }
      emit_json(out, out_path);
      return 0;
    }

    if (*loops_cmd) {
      instmeter::Cfg g = instmeter::cfg_from_json(load_json(cfg_path));
      std::vector<instmeter::Loop> loops = instmeter::extract_loops(g);
      json out;
      out["loops"] = instmeter::loops_to_json(loops);
      out["relation_graph"] = instmeter::relation_graph_to_json(instmeter::relation_graph(loops));
      emit_json(out, out_path);
      return 0;
    }

    if (*map_cmd) {
      instmeter::SrcFunction src = instmeter::parse_src_cfg(load_json(src_path));
      instmeter::ParsedListing listing =
          instmeter::parse_disasm(instmeter::read_text_file(bin_path));
      const std::string symbol = function_name.empty() ? src.name : function_name;
      instmeter::MappingResult r =
          instmeter::map_function(src, find_function(listing, symbol), arch, seed);
      if (verbose)
        std::cerr << "weight draws used: " << r.trials_used << "\n";
      emit_json(instmeter::mapping_to_json(r), out_path);
      return 0;
    }

    if (*lib_cmd) {
      json spec = load_json(spec_path);
      if (!spec.is_object() || !spec.contains("kernels") || !spec["kernels"].is_array())
        throw instmeter::DataError("manifest '" + spec_path + "' needs a 'kernels' array");
      std::string listing_text = instmeter::read_text_file(bin_path);
      instmeter::ParsedListing listing = instmeter::parse_disasm(listing_text);
      std::filesystem::path spec_dir = std::filesystem::path(spec_path).parent_path();

      instmeter::InstructionLibrary lib;
      lib.architecture = arch_name;
      lib.tflm_version_tag =
          !version_tag.empty() ? version_tag : spec.value("tflm_version_tag", "");
      lib.cpi = cpi_path.empty() ? instmeter::CpiTable::builtin(arch_name)
                                 : instmeter::CpiTable::from_json(load_json(cpi_path));
      lib.dispatch_rules = instmeter::default_dispatch_rules();

      std::string hashed = listing_text;
      for (const auto& kj : spec["kernels"]) {
        std::string name = kj.at("name").get<std::string>();
        std::string src_file = (spec_dir / kj.at("src_cfg").get<std::string>()).string();
        std::string symbol = kj.value("symbol", name);
        std::string src_text = instmeter::read_text_file(src_file);
        hashed += src_text;
        instmeter::SrcFunction src = instmeter::parse_src_cfg(json::parse(src_text));
        const instmeter::BinFunction& fn = find_function(listing, symbol);
        instmeter::MappingResult r = instmeter::map_function(src, fn, arch, seed);
        if (verbose)
          std::cerr << name << ": " << r.best.pairs.size() << " loop pairs"
                    << (r.ambiguous ? " (ambiguous)" : "") << "\n";
        instmeter::KernelProfile kp = instmeter::build_profile(src, fn, r, arch);
        kp.name = name;
        lib.kernels[name] = std::move(kp);
      }
      lib.input_hash = instmeter::fnv1a_hex(hashed);
      emit_json(instmeter::library_to_json(lib), out_path);
      return 0;
    }

    if (*est_cmd) {
      instmeter::InstructionLibrary lib = instmeter::library_from_json(load_json(lib_path));
      instmeter::ModelDescriptor model = instmeter::load_model(load_json(model_path));
      instmeter::ModelCycles mc = instmeter::model_cycles(lib, instmeter::lower_layers(model));
      std::cout << "model: " << model.name << "\n";
      std::cout << "total cycles: " << mc.total << "\n";
      for (const instmeter::OperatorCycles& oc : mc.ops) {
        std::cout << "  " << oc.op_type << ": " << oc.cycles << "\n";
        if (verbose)
          for (const auto& [kernel, c] : oc.kernels)
            std::cout << "    " << kernel << ": " << c << "\n";
      }
      if (!out_path.empty()) {
        json out = instmeter::model_cycles_to_json(mc);
        out["model"] = model.name;
        emit_json(out, out_path);
      }
      return 0;
    }

    if (*fit_cmd) {
      std::vector<instmeter::DatasetRow> rows = instmeter::load_dataset(dataset_path);
      std::size_t skipped = 0;
      std::vector<instmeter::Sample> samples = instmeter::select_target(rows, target, &skipped);
      if (skipped)
        std::cerr << "note: skipped " << skipped << " rows missing " << target << "\n";
      instmeter::LinearPredictor p = method == "ols"
                                         ? instmeter::ols_fit(samples, target)
                                         : instmeter::subsample_fit(samples, target, 10, seed);
      emit_json(instmeter::predictor_to_json(p), out_path);
      return 0;
    }

    if (*pred_cmd) {
      instmeter::LinearPredictor p = instmeter::predictor_from_json(load_json(predictor_path));
      json out;
      out["target"] = p.target;
      out["cycles"] = cycles_value;
      out["predicted"] = p.predict(cycles_value);
      emit_json(out, out_path);
      return 0;
    }

    if (*eval_cmd) {
      std::vector<instmeter::DatasetRow> rows = instmeter::load_dataset(dataset_path);
      std::size_t skipped = 0;
      std::vector<instmeter::Sample> samples = instmeter::select_target(rows, target, &skipped);

      instmeter::LinearPredictor p;
      std::vector<std::size_t> eval_indices;
      std::string mode;
      if (!predictor_path.empty()) {
        mode = "predictor";
        p = instmeter::predictor_from_json(load_json(predictor_path));
        if (p.target != target)
          throw instmeter::DataError("predictor targets '" + p.target + "', asked to evaluate '" +
                                     target + "'");
        for (std::size_t i = 0; i < samples.size(); ++i) eval_indices.push_back(i);
      } else {
        mode = "few-shot";
        p = instmeter::subsample_fit(samples, target, 10, seed);
        std::vector<bool> in_train(samples.size(), false);
        for (std::size_t i : p.fit_report.train_indices) in_train[i] = true;
        for (std::size_t i = 0; i < samples.size(); ++i)
          if (!in_train[i]) eval_indices.push_back(i);
      }
      if (eval_indices.empty()) throw instmeter::DataError("nothing to evaluate");

      std::vector<EvalRow> table;
      std::vector<double> errs;
      for (std::size_t i : eval_indices) {
        const instmeter::Sample& s = samples[i];
        double predicted = p.predict(s.cycles);
        double err = instmeter::relative_error(predicted, s.truth);
        table.push_back({s.model_id, s.cycles, s.truth, predicted, err});
        errs.push_back(err);
      }
      double mean = 0.0;
      for (double e : errs) mean += e;
      mean /= static_cast<double>(errs.size());

      std::string csv = "model_id,cycles,truth,predicted,rel_err_pct\n";
      for (const EvalRow& r : table) {
        csv += r.model_id;
        csv += ',';
        csv += format_double(r.cycles);
        csv += ',';
        csv += format_double(r.truth);
        csv += ',';
        csv += format_double(r.predicted);
        csv += ',';
        csv += format_double(r.rel_err);
        csv += '\n';
      }
      instmeter::write_text_file_atomic(eval_prefix + ".csv", csv);

      json out;
      out["target"] = target;
      out["mode"] = mode;
      out["a"] = p.a;
      out["b"] = p.b;
      out["n_rows"] = rows.size();
      out["skipped_rows"] = skipped;
      out["n_eval"] = eval_indices.size();
      out["mean_rel_err_pct"] = mean;
      out["percentiles"] = percentile_block(errs);
      if (mode == "few-shot") {
        out["seed"] = seed;
        out["train_indices"] = p.fit_report.train_indices;
      }
      emit_json(out, eval_prefix + ".json");
      if (verbose)
        std::cerr << "evaluated " << eval_indices.size() << " rows, mean error " << mean
                  << "%\n";
      return 0;
    }
  } catch (const instmeter::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
