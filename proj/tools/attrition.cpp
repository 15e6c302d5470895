// attrition: command-line front end for the attrition pipeline.
//
//   attrition eda     --data train.csv --schema hr.schema --out eda_out
//   attrition cv      --data train.csv --schema hr.schema --cv kfold:10
//   attrition train   --data train.csv --schema hr.schema --holdout 0.2
//   attrition compare --data train.csv --schema hr.schema --cv kfold:5
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime error.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "attrition/errors.hpp"
#include "attrition/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

// Flags shared by every subcommand; each maps onto a PipelineConfig key.
const std::vector<std::pair<std::string, std::string>> kFlags{
    {"data", "Training CSV"},
    {"schema", "Schema file describing the CSV columns"},
    {"out", "Output directory"},
    {"model", "forest | tree | logreg | majority"},
    {"n-trees", "Trees in the forest"},
    {"max-depth", "Maximum tree depth (none for unlimited)"},
    {"min-samples-leaf", "Nodes with fewer rows become leaves"},
    {"feature-subset", "Features tried per node: sqrt | all | <count>"},
    {"bootstrap", "Resample rows per tree (true | false)"},
    {"threads", "Worker threads (0 = hardware concurrency)"},
    {"cv", "loocv | kfold:K"},
    {"oversample", "Balance classes by minority oversampling (true | false)"},
    {"encoding-policy", "alphabetical | schema_order"},
    {"onehot-threshold", "Categorical columns with more values are one-hot encoded"},
    {"seed", "Master random seed"},
    {"holdout", "Fraction of rows held out and scored separately"},
    {"loocv-max-rows", "Refuse leave-one-out above this many rows"},
    {"bins", "Histogram bins for numeric distributions"},
    {"lenient", "Treat undeclared categories as missing (true | false)"},
};

struct Invocation {
  std::string config_file;
  std::map<std::string, std::string> values;
};

void add_flags(CLI::App& sub, Invocation& inv) {
  sub.add_option("--config", inv.config_file, "Flat key = value config file (flags override it)");
  for (const auto& [key, help] : kFlags) sub.add_option("--" + key, inv.values[key], help);
}

attrition::PipelineConfig resolve(const CLI::App& sub, const Invocation& inv) {
  attrition::PipelineConfig config;
  if (!inv.config_file.empty()) config = attrition::load_config(inv.config_file);
  for (const auto& [key, help] : kFlags) {
    if (sub.count("--" + key) > 0) config.set(key, inv.values.at(key));
  }
  config.validate();
  return config;
}

void print_stages(const attrition::PipelineResult& result) {
  std::cout << "stages:";
  for (const auto& stage : result.stages) std::cout << ' ' << stage;
  std::cout << '\n';
  for (const auto& path : result.artifacts) std::cout << "wrote " << path.string() << '\n';
}

int run(const std::string& command, const attrition::PipelineConfig& config) {
  if (command == "eda") {
    print_stages(attrition::eda_command(config));
  } else if (command == "compare") {
    const auto result = attrition::compare_command(config);
    print_stages(result);
    for (const auto& [model, accuracy] : result.comparison) {
      std::printf("%-10s %.4f\n", model.c_str(), accuracy);
    }
  } else {
    const auto result =
        command == "cv" ? attrition::run_pipeline(config) : attrition::train_command(config);
    print_stages(result);
    if (result.training_metrics) {
      std::printf("training accuracy: %.4f\n", result.training_metrics->accuracy);
    }
    if (result.holdout_metrics) {
      std::printf("holdout accuracy: %.4f\n", result.holdout_metrics->accuracy);
    }
    if (result.cv) {
      std::printf("mean CV accuracy (%s): %.4f\n", result.cv->scheme.to_string().c_str(),
                  result.cv->mean_accuracy);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Employee attrition prediction pipeline"};
  app.require_subcommand(1);

  Invocation inv;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"eda", "Distribution tables, correlations and missing counts; fits nothing"},
      {"train", "Preprocess, fit the chosen model and score it (no cross-validation)"},
      {"cv", "Full pipeline: preprocess, cross-validate, fit and report"},
      {"compare", "Cross-validate every model under the same scheme and seed"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_flags(*sub, inv);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    for (const auto* sub : subs) {
      if (sub->parsed()) return run(sub->get_name(), resolve(*sub, inv));
    }
    return kExitConfig;
  } catch (const attrition::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const attrition::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
