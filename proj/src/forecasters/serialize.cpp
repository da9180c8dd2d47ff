// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <sstream>

#include "grngc/forecasters.hpp"
#include "json.hpp"

namespace grngc {

using nlohmann::json;

std::string backbone_to_json(const Backbone& backbone) {
  json doc;
  doc["kind"] = to_string(backbone.kind);
  doc["sizes"] = backbone.sizes;
  doc["seed"] = backbone.seed;
  if (const auto* kan = std::get_if<KanParams>(&backbone.params)) {
    doc["spline"] = {{"degree", kan->spline.degree},
                     {"grid_size", kan->spline.grid_size},
                     {"lo", kan->spline.lo},
                     {"hi", kan->spline.hi}};
  } else {
    doc["activation"] = to_string(std::get<MlpParams>(backbone.params).hidden_activation);
  }
  json arrays = json::array();
  for (const diff::Var& p : backbone.parameters()) {
    arrays.push_back(std::vector<double>(p.values().begin(), p.values().end()));
  }
  doc["parameters"] = std::move(arrays);
  return doc.dump();
}

Backbone backbone_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValueError(std::string("backbone document: ") + e.what());
  }
  try {
    InitOptions options;
    const BackboneKind kind = parse_backbone_kind(doc.at("kind").get<std::string>());
    if (kind == BackboneKind::kKan) {
      const json& s = doc.at("spline");
      options.spline.degree = s.at("degree").get<int>();
      options.spline.grid_size = s.at("grid_size").get<int>();
      options.spline.lo = s.at("lo").get<double>();
      options.spline.hi = s.at("hi").get<double>();
    } else {
      options.hidden_activation = parse_activation(doc.at("activation").get<std::string>());
    }
    Backbone bb = init_params(kind, doc.at("sizes").get<std::vector<std::size_t>>(),
                              options, doc.at("seed").get<std::uint64_t>());
    const json& arrays = doc.at("parameters");
    auto params = bb.parameters();
    if (arrays.size() != params.size()) {
      throw ValueError("backbone document: expected " + std::to_string(params.size()) +
                       " parameter arrays, found " + std::to_string(arrays.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto values = arrays[i].get<std::vector<double>>();
      if (values.size() != params[i].size()) {
        throw ValueError("backbone document: parameter array " + std::to_string(i) +
                         " has " + std::to_string(values.size()) + " values, expected " +
                         std::to_string(params[i].size()));
      }
      std::copy(values.begin(), values.end(), params[i].mutable_values().begin());
    }
    return bb;
  } catch (const json::exception& e) {
    throw ValueError(std::string("backbone document: ") + e.what());
  }
}

void save_backbone(const Backbone& backbone, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << backbone_to_json(backbone) << '\n';
  if (!out) throw IoError(path.string(), "write failed");
}

Backbone load_backbone(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return backbone_from_json(buffer.str());
}

}  // namespace grngc
