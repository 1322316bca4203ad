#include "leakprobe/model.hpp"

#include "leakprobe/errors.hpp"

#include <stdexcept>

namespace leakprobe {

void DecodingConfig::validate() const {
  if (max_new_tokens < 1)
    throw std::invalid_argument("max_new_tokens must be at least 1");
  if (auto* t = std::get_if<TopK>(&algorithm)) {
    if (t->k < 1)
      throw std::invalid_argument("top-k needs k >= 1");
    if (!(t->temperature > 0.0))
      throw std::invalid_argument("top-k needs temperature > 0");
  }
  if (auto* b = std::get_if<Beam>(&algorithm); b && b->width < 1)
    throw std::invalid_argument("beam search needs num_beams >= 1");
}

std::string DecodingConfig::label_suffix() const {
  if (std::holds_alternative<TopK>(algorithm))
    return " Top-k";
  if (std::holds_alternative<Beam>(algorithm))
    return " Beam";
  return "";
}

nlohmann::json decoding_to_wire(const DecodingConfig& config) {
  return std::visit(
      [&](const auto& alg) -> nlohmann::json {
        using T = std::decay_t<decltype(alg)>;
        if constexpr (std::is_same_v<T, Greedy>) {
          return {{"algorithm", "greedy"}};
        } else if constexpr (std::is_same_v<T, TopK>) {
          return {{"algorithm", "top_k"},
                  {"k", alg.k},
                  {"temperature", alg.temperature},
                  {"seed", config.sampling_seed}};
        } else {
          return {{"algorithm", "beam"}, {"num_beams", alg.width}, {"early_stopping", alg.early_stopping}};
        }
      },
      config.algorithm);
}

DecodingConfig decoding_from_wire(const nlohmann::json& decoding, int max_new_tokens) {
  DecodingConfig config;
  config.max_new_tokens = max_new_tokens;
  auto algorithm = decoding.at("algorithm").get<std::string>();
  if (algorithm == "greedy") {
    config.algorithm = Greedy{};
  } else if (algorithm == "top_k") {
    config.algorithm = TopK{decoding.at("k").get<int>(), decoding.at("temperature").get<double>()};
    config.sampling_seed = decoding.value("seed", std::uint64_t{0});
  } else if (algorithm == "beam") {
    config.algorithm = Beam{decoding.at("num_beams").get<int>(), decoding.value("early_stopping", false)};
  } else {
    throw ProtocolError("unknown decoding algorithm '" + algorithm + "'");
  }
  return config;
}

} // namespace leakprobe
