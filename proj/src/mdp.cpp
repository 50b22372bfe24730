#include "bmdp/mdp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace bmdp {

namespace {

constexpr double kRowSumSlack = 1e-6;

// Validates a probability vector and renormalizes small drift in place.
void fix_row(std::span<double> row, const char* invariant, const std::string& where) {
  double sum = 0.0;
  for (double v : row) {
    if (v < 0.0) throw ModelInvariantViolation(invariant, "negative entry in " + where);
    sum += v;
  }
  if (std::abs(sum - 1.0) > kRowSumSlack)
    throw ModelInvariantViolation(invariant, where + " sums to " + std::to_string(sum));
  if (sum != 1.0) {
    for (double& v : row) v /= sum;
  }
}

}  // namespace

LatentModel::LatentModel(int horizon, int num_states, int num_actions, std::vector<double> initial,
                         std::vector<std::vector<double>> trans)
    : horizon_(horizon),
      num_states_(num_states),
      num_actions_(num_actions),
      initial_(std::move(initial)),
      trans_(std::move(trans)) {
  if (horizon_ < 1 || num_states_ < 1 || num_actions_ < 1)
    throw ModelInvariantViolation("latent-sizes", "H, |S|, |A| must all be >= 1");
  if (initial_.size() != static_cast<std::size_t>(num_states_))
    throw ModelInvariantViolation("latent-initial-shape", "P1 length != |S|");
  if (trans_.size() != static_cast<std::size_t>(horizon_ - 1))
    throw ModelInvariantViolation("latent-trans-shape", "expected H-1 transition layers");
  fix_row(initial_, "latent-row-stochastic", "P1");
  for (int h = 2; h <= horizon_; ++h) {
    auto& t = trans_[static_cast<std::size_t>(h - 2)];
    if (t.size() != static_cast<std::size_t>(num_states_) * num_actions_ * num_states_)
      throw ModelInvariantViolation("latent-trans-shape", "layer " + std::to_string(h) + " row block size");
    for (int s = 0; s < num_states_; ++s)
      for (int a = 0; a < num_actions_; ++a) {
        std::span<double> row{t.data() + static_cast<std::size_t>((s * num_actions_ + a)) * num_states_,
                              static_cast<std::size_t>(num_states_)};
        fix_row(row, "latent-row-stochastic",
                "P[" + std::to_string(h) + "](.|" + std::to_string(s) + "," + std::to_string(a) + ")");
      }
  }
}

ObservationModel::ObservationModel(int horizon, int num_states, int num_obs,
                                   std::vector<std::vector<double>> emissions, std::vector<int> decoder)
    : horizon_(horizon),
      num_states_(num_states),
      num_obs_(num_obs),
      emissions_(std::move(emissions)),
      decoder_(std::move(decoder)) {
  if (num_obs_ < 1) throw ModelInvariantViolation("obs-sizes", "|X| must be >= 1");
  if (decoder_.size() != static_cast<std::size_t>(num_obs_))
    throw ModelInvariantViolation("decoder-total", "decoder_star length != |X|");
  for (int x = 0; x < num_obs_; ++x)
    if (decoder_[static_cast<std::size_t>(x)] < 0 || decoder_[static_cast<std::size_t>(x)] >= num_states_)
      throw ModelInvariantViolation("decoder-total", "decoder_star(" + std::to_string(x) + ") out of range");
  if (emissions_.size() != static_cast<std::size_t>(horizon_))
    throw ModelInvariantViolation("obs-shape", "expected H emission layers");
  for (int h = 1; h <= horizon_; ++h) {
    auto& e = emissions_[static_cast<std::size_t>(h - 1)];
    if (e.size() != static_cast<std::size_t>(num_states_) * num_obs_)
      throw ModelInvariantViolation("obs-shape", "layer " + std::to_string(h) + " emission block size");
    for (int s = 0; s < num_states_; ++s) {
      std::span<double> row{e.data() + static_cast<std::size_t>(s) * num_obs_,
                            static_cast<std::size_t>(num_obs_)};
      fix_row(row, "obs-row-stochastic", "O[" + std::to_string(h) + "](.|" + std::to_string(s) + ")");
      for (int x = 0; x < num_obs_; ++x)
        if (row[static_cast<std::size_t>(x)] > 0.0 && decoder_[static_cast<std::size_t>(x)] != s)
          throw ModelInvariantViolation(
              "emission-support-decodable",
              "O[" + std::to_string(h) + "](" + std::to_string(x) + "|" + std::to_string(s) +
                  ") > 0 but decoder_star maps it elsewhere");
    }
  }
}

BlockMdp::BlockMdp(LatentModel latent, ObservationModel obs, std::shared_ptr<const ConceptClass> concepts)
    : latent_(std::move(latent)), obs_(std::move(obs)), concepts_(std::move(concepts)) {
  if (concepts_) {
    if (concepts_->num_obs() != obs_.num_obs())
      throw ModelInvariantViolation("concept-class-consistent", "|X| mismatch with concept class");
    if (concepts_->truth_for_verification() != obs_.decoder())
      throw ModelInvariantViolation("concept-class-consistent",
                                    "ground-truth member differs from decoder_star");
  }
}

ConceptClass::ConceptClass(int num_obs, int num_states, std::vector<std::vector<int>> members, int truth_index)
    : num_obs_(num_obs), num_states_(num_states), members_(std::move(members)), truth_index_(truth_index) {
  if (members_.empty()) throw ModelInvariantViolation("concept-class-nonempty", "no members");
  if (truth_index_ < 0 || truth_index_ >= static_cast<int>(members_.size()))
    throw ModelInvariantViolation("concept-truth-index", "ground-truth index out of range");
  for (const auto& m : members_) {
    if (m.size() != static_cast<std::size_t>(num_obs_))
      throw ModelInvariantViolation("concept-total", "member not total on X");
    for (int s : m)
      if (s < 0 || s >= num_states_)
        throw ModelInvariantViolation("concept-total", "member maps outside S");
  }
}

ConceptClass augment(const ConceptClass& base) {
  const AugLayout lay = aug_layout(base);
  std::vector<std::vector<int>> members;
  members.reserve(static_cast<std::size_t>(base.size()));
  for (int k = 0; k < base.size(); ++k) {
    std::vector<int> m = base.member(k);
    m.push_back(lay.state0());
    m.push_back(lay.state1());
    members.push_back(std::move(m));
  }
  return ConceptClass(lay.num_obs(), lay.num_states(), std::move(members),
                      base.truth_index_for_verification());
}

namespace {

using nlohmann::json;

json concept_to_json(const ConceptClass& cc) {
  json j;
  j["num_obs"] = cc.num_obs();
  j["num_states"] = cc.num_states();
  j["truth_index"] = cc.truth_index_for_verification();
  json members = json::array();
  for (int k = 0; k < cc.size(); ++k) members.push_back(cc.member(k));
  j["members"] = std::move(members);
  return j;
}

ConceptClass concept_from_json(const json& j) {
  return ConceptClass(j.at("num_obs").get<int>(), j.at("num_states").get<int>(),
                      j.at("members").get<std::vector<std::vector<int>>>(),
                      j.at("truth_index").get<int>());
}

}  // namespace

std::string save_env_json(const BlockMdp& mdp) {
  json j;
  j["format"] = "bmdp-env";
  j["version"] = 1;
  j["H"] = mdp.horizon();
  j["S"] = mdp.num_states();
  j["A"] = mdp.num_actions();
  j["X"] = mdp.num_obs();
  j["P1"] = std::vector<double>(mdp.latent().initial().begin(), mdp.latent().initial().end());
  json trans = json::array();
  for (int h = 2; h <= mdp.horizon(); ++h) {
    json layer = json::array();
    for (int s = 0; s < mdp.num_states(); ++s)
      for (int a = 0; a < mdp.num_actions(); ++a) {
        auto row = mdp.latent().row(h, s, a);
        layer.push_back(std::vector<double>(row.begin(), row.end()));
      }
    trans.push_back(std::move(layer));
  }
  j["P"] = std::move(trans);
  json emis = json::array();
  for (int h = 1; h <= mdp.horizon(); ++h) {
    json layer = json::array();
    for (int s = 0; s < mdp.num_states(); ++s) {
      auto row = mdp.obs().row(h, s);
      layer.push_back(std::vector<double>(row.begin(), row.end()));
    }
    emis.push_back(std::move(layer));
  }
  j["O"] = std::move(emis);
  j["decoder_star"] = mdp.obs().decoder();
  if (auto cc = mdp.concept_class_handle()) j["concept_class"] = concept_to_json(*cc);
  if (mdp.has_terminal()) {
    j["terminal_state"] = mdp.terminal_state();
    j["terminal_obs"] = mdp.terminal_obs();
  }
  return j.dump(2);
}

BlockMdp load_env_json(const std::string& text) {
  json j = json::parse(text);
  if (j.value("format", "") != std::string("bmdp-env"))
    throw ModelInvariantViolation("env-format", "not a bmdp-env document");
  const int H = j.at("H").get<int>();
  const int S = j.at("S").get<int>();
  const int A = j.at("A").get<int>();
  const int X = j.at("X").get<int>();
  std::vector<double> p1 = j.at("P1").get<std::vector<double>>();
  std::vector<std::vector<double>> trans;
  for (const auto& layer : j.at("P")) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(S) * A * S);
    for (const auto& row : layer)
      for (const auto& v : row) flat.push_back(v.get<double>());
    trans.push_back(std::move(flat));
  }
  std::vector<std::vector<double>> emis;
  for (const auto& layer : j.at("O")) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(S) * X);
    for (const auto& row : layer)
      for (const auto& v : row) flat.push_back(v.get<double>());
    emis.push_back(std::move(flat));
  }
  std::vector<int> decoder = j.at("decoder_star").get<std::vector<int>>();
  std::shared_ptr<const ConceptClass> cc;
  if (j.contains("concept_class")) cc = std::make_shared<ConceptClass>(concept_from_json(j.at("concept_class")));
  BlockMdp mdp(LatentModel(H, S, A, std::move(p1), std::move(trans)),
               ObservationModel(H, S, X, std::move(emis), std::move(decoder)), std::move(cc));
  if (j.contains("terminal_state")) mdp.mark_terminal(j.at("terminal_state").get<int>(), j.at("terminal_obs").get<int>());
  return mdp;
}

void save_env_file(const BlockMdp& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << save_env_json(mdp) << '\n';
}

BlockMdp load_env_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_env_json(ss.str());
}

}  // namespace bmdp
