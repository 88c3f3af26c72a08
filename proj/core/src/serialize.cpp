#include "alpool/serialize.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "alpool/errors.hpp"

namespace alpool {

namespace {

using nlohmann::json;

json layer_to_json(const AffineLayer& l) {
  return json{{"in_dim", l.in_dim},
              {"out_dim", l.out_dim},
              {"weights", l.weights},
              {"bias", l.bias}};
}

AffineLayer layer_from_json(const json& j) {
  AffineLayer l;
  l.in_dim = j.at("in_dim").get<std::size_t>();
  l.out_dim = j.at("out_dim").get<std::size_t>();
  l.weights = j.at("weights").get<std::vector<double>>();
  l.bias = j.at("bias").get<std::vector<double>>();
  if (l.weights.size() != l.in_dim * l.out_dim || l.bias.size() != l.out_dim)
    throw IntegrityError("layer weight/bias sizes inconsistent with dimensions");
  return l;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad ") + what + " JSON: " + e.what());
  }
}

}  // namespace

std::string model_to_json(const Classifier& model) {
  json j;
  j["format"] = "alpool-model";
  j["version"] = 1;
  j["input_dim"] = model.input_dim();
  j["embedding_index"] = model.embedding_index();
  j["hidden"] = json::array();
  for (const AffineLayer& l : model.hidden()) j["hidden"].push_back(layer_to_json(l));
  j["output"] = layer_to_json(model.output());
  return j.dump(2) + "\n";
}

Classifier model_from_json(const std::string& text) {
  const json j = parse_json(text, "model");
  try {
    if (j.at("format").get<std::string>() != "alpool-model")
      throw ParseError("not an alpool model file");
    const auto input_dim = j.at("input_dim").get<std::size_t>();
    const auto embedding_index = j.at("embedding_index").get<std::size_t>();
    std::vector<AffineLayer> hidden;
    for (const json& lj : j.at("hidden")) hidden.push_back(layer_from_json(lj));
    AffineLayer output = layer_from_json(j.at("output"));

    std::vector<std::size_t> widths;
    for (const AffineLayer& l : hidden) widths.push_back(l.out_dim);
    Classifier model = Classifier::zeros(input_dim, widths, embedding_index);
    std::size_t prev = input_dim;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      if (hidden[i].in_dim != prev)
        throw IntegrityError("hidden layer " + std::to_string(i) + " input dimension mismatch");
      prev = hidden[i].out_dim;
      model.hidden()[i] = hidden[i];
    }
    if (output.in_dim != prev || output.out_dim != 2)
      throw IntegrityError("output layer shape mismatch");
    model.output() = output;
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad model JSON: ") + e.what());
  }
}

void save_model(const Classifier& model, const std::string& path) {
  write_file(path, model_to_json(model));
}

Classifier load_model(const std::string& path) {
  try {
    return model_from_json(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string run_record_to_json(const RunRecord& run) {
  json j;
  j["system"] = run.system;
  j["scorer"] = to_string(run.scorer);
  j["algorithm"] = to_string(run.algorithm);
  j["seed"] = run.seed;
  j["iterations"] = json::array();
  for (const IterationRecord& rec : run.iterations) {
    json rj;
    rj["iteration"] = rec.iteration;
    rj["selected_uids"] = rec.selected_uids;
    rj["removed_uids"] = rec.removed_uids;
    rj["train_size"] = rec.train_size;
    rj["pool_size"] = rec.pool_size;
    rj["eers"] = json::array();
    for (const auto& [name, eer] : rec.eers)
      rj["eers"].push_back(json{{"test_set", name}, {"eer", eer}});
    j["iterations"].push_back(std::move(rj));
  }
  return j.dump(2) + "\n";
}

RunRecord run_record_from_json(const std::string& text) {
  const json j = parse_json(text, "run record");
  try {
    RunRecord run;
    run.system = j.at("system").get<std::string>();
    run.scorer = scorer_from_string(j.at("scorer").get<std::string>());
    run.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
    run.seed = j.at("seed").get<std::uint64_t>();
    for (const json& rj : j.at("iterations")) {
      IterationRecord rec;
      rec.iteration = rj.at("iteration").get<int>();
      rec.selected_uids = rj.at("selected_uids").get<std::vector<std::uint64_t>>();
      rec.removed_uids = rj.at("removed_uids").get<std::vector<std::uint64_t>>();
      rec.train_size = rj.at("train_size").get<std::size_t>();
      rec.pool_size = rj.at("pool_size").get<std::size_t>();
      for (const json& ej : rj.at("eers"))
        rec.eers.emplace_back(ej.at("test_set").get<std::string>(), ej.at("eer").get<double>());
      run.iterations.push_back(std::move(rec));
    }
    return run;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad run record JSON: ") + e.what());
  }
}

void save_run_record(const RunRecord& run, const std::string& path) {
  write_file(path, run_record_to_json(run));
}

RunRecord load_run_record(const std::string& path) {
  try {
    return run_record_from_json(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void append_error_log(const std::string& path, const std::string& where,
                      const std::string& what) {
  json log = json::array();
  {
    std::ifstream in(path, std::ios::binary);
    if (in) {
      std::ostringstream buf;
      buf << in.rdbuf();
      if (!buf.str().empty()) log = parse_json(buf.str(), "error log");
    }
  }
  log.push_back(json{{"where", where}, {"what", what}});
  write_file(path, log.dump(2) + "\n");
}

}  // namespace alpool
