#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fulfillkit/corpus.hpp"

namespace fulfillkit {

namespace fs = std::filesystem;

namespace {

constexpr std::int64_t kDay = 86400;
constexpr std::int64_t kEpochBase = 1262304000;  // 2010-01-01
constexpr std::uint64_t kCalibrationSeed = 0x5eed'ca1bULL;
constexpr int kCalibrationDraws = 20000;

// Category contribution to latent difficulty, indexed like kCategories.
constexpr std::array<double, 15> kCategoryEffect = {-0.10, 0.00, 0.00,  -0.30, 0.20,  0.10, -0.05, 0.10,
                                                     0.15,  -0.20, -0.15, -0.10, 0.05, 0.30,  -0.25};

const std::vector<std::string> kFiller = {"includes", "limited", "edition", "signed", "copy", "exclusive", "special",
                                          "bundle",   "plus",    "reward",  "tier",   "set"};
const std::vector<std::string> kProgressWords = {"shipped", "shipping", "progress", "finished", "done",  "ready",
                                                 "packed",  "tracking", "completed", "schedule", "ahead", "delivered"};
const std::vector<std::string> kProblemWords = {"delay", "delayed", "problem", "sorry",  "issue",    "stuck",
                                                "waiting", "unfortunately", "factory", "setback", "behind", "postponed"};
const std::vector<std::string> kCreatorNeutral = {"update", "backers", "thanks",  "team",     "photos",
                                                  "production", "week", "today", "everyone", "news"};
const std::vector<std::string> kBackerHappy = {"excited", "love", "great", "awesome", "amazing", "congrats", "thanks",
                                               "happy"};
const std::vector<std::string> kBackerWorried = {"when", "refund", "still", "waiting", "status", "eta", "anyone",
                                                 "news", "received", "worried"};
const std::vector<std::string> kProse = {
    "innovative", "community",  "beautiful", "experience", "creative",   "original", "project",   "artistic",
    "incredible", "collaboration", "technology", "design",  "support",    "world",    "dream",     "quality",
    "materials",  "unique",     "story",     "people",     "simple",     "passion",  "independent", "studio"};

template <class Rng>
double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

template <class Rng>
int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

template <class Rng>
const std::string& pick(Rng& rng, const std::vector<std::string>& words) {
  return words[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(words.size()) - 1))];
}

template <class Rng>
int poisson(Rng& rng, double mean) {
  if (mean <= 0) return 0;
  return std::poisson_distribution<int>(mean)(rng);
}

// Latent quantities that determine the planted labels.
struct Skeleton {
  int category = 0;
  std::vector<int> tiers;
  std::vector<std::int64_t> backers;
  double diligence = 0.0;  // uniform in [-1, 1]

  double difficulty() const {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < tiers.size(); ++i) {
      const double w = static_cast<double>(backers[i] + 1);
      num += w * tiers[i];
      den += w;
    }
    return num / den + kCategoryEffect[static_cast<std::size_t>(category)];
  }
  double score() const { return 1.5 * difficulty() - 1.0 * diligence; }
};

template <class Rng>
Skeleton draw_skeleton(Rng& rng, const std::array<double, 3>& mix) {
  Skeleton s;
  s.category = uniform_int(rng, 0, static_cast<int>(kCategories.size()) - 1);
  const int n_rewards = uniform_int(rng, 3, 9);
  std::discrete_distribution<int> tier_dist(mix.begin(), mix.end());
  std::lognormal_distribution<double> backers(std::log(15.0), 1.0);
  for (int r = 0; r < n_rewards; ++r) {
    s.tiers.push_back(tier_dist(rng));
    s.backers.push_back(static_cast<std::int64_t>(std::floor(backers(rng))));
  }
  s.diligence = uniform(rng, -1.0, 1.0);
  return s;
}

double calibrate_threshold(const SynthConfig& config) {
  std::mt19937_64 rng(kCalibrationSeed);
  const std::array<double, 3> reference_mix = {1.0, 1.0, 1.0};
  std::vector<double> scores;
  scores.reserve(kCalibrationDraws);
  for (int i = 0; i < kCalibrationDraws; ++i) scores.push_back(draw_skeleton(rng, reference_mix).score());
  std::sort(scores.begin(), scores.end());
  // Latent late share such that flipping with probability `noise` lands on late_rate.
  double latent = config.late_rate;
  if (std::abs(1.0 - 2.0 * config.noise) > 1e-12)
    latent = std::clamp((config.late_rate - config.noise) / (1.0 - 2.0 * config.noise), 0.0, 1.0);
  const auto idx = static_cast<std::size_t>(
      std::clamp((1.0 - latent) * kCalibrationDraws, 0.0, static_cast<double>(kCalibrationDraws - 1)));
  if (latent >= 1.0) return -1e300;
  if (latent <= 0.0) return 1e300;
  return scores[idx];
}

template <class Rng>
std::string sentence(Rng& rng, const std::vector<std::string>& words, int min_len, int max_len) {
  std::string out;
  const int len = uniform_int(rng, min_len, max_len);
  for (int i = 0; i < len; ++i) {
    std::string w = pick(rng, words);
    if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    if (!out.empty()) out += (i > 1 && uniform(rng, 0, 1) < 0.15) ? ", " : " ";
    out += w;
  }
  return out + ".";
}

template <class Rng>
std::string mixed_text(Rng& rng, const std::vector<std::string>& a, const std::vector<std::string>& b,
                       double p_b, const std::vector<std::string>& neutral, int len) {
  std::string out;
  for (int i = 0; i < len; ++i) {
    const double u = uniform(rng, 0, 1);
    const std::string& w = u < 0.3 ? pick(rng, neutral) : (uniform(rng, 0, 1) < p_b ? pick(rng, b) : pick(rng, a));
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

std::array<std::vector<std::string>, 3> SynthConfig::default_pools() {
  return {std::vector<std::string>{"sticker", "stickers", "postcard", "postcards", "wallpaper", "download", "digital",
                                   "pdf", "shoutout", "email", "desktop", "ringtone", "ebook", "mp3", "credits",
                                   "website", "listing", "mention", "avatar", "badge"},
          std::vector<std::string>{"tshirt", "poster", "print", "mug", "book", "hardcover", "vinyl", "cd", "dvd",
                                   "bookmark", "tote", "bag", "enamel", "pin", "patch", "keychain", "calendar",
                                   "notebook", "journal", "zine"},
          std::vector<std::string>{"custom", "prototype", "device", "handmade", "sculpture", "electronic", "kit",
                                   "hardware", "assembled", "engraved", "furniture", "instrument", "drone", "robot",
                                   "circuit", "leather", "jewelry", "ceramic", "painting", "commission"}};
}

SynthConfig SynthConfig::defaults() {
  SynthConfig c;
  c.pools = default_pools();
  return c;
}

void SynthConfig::validate() const {
  if (n_projects <= 0) throw config_error("synth: n_projects must be positive");
  if (!(late_rate >= 0 && late_rate <= 1)) throw config_error("synth: late_rate must lie in [0,1]");
  if (!(noise >= 0 && noise < 0.5)) throw config_error("synth: noise must lie in [0,0.5)");
  if (!(duration_fraction >= 0 && duration_fraction <= 1))
    throw config_error("synth: duration_fraction must lie in [0,1]");
  double mix_total = 0;
  for (std::size_t t = 0; t < 3; ++t) {
    if (pool_mix[t] < 0) throw config_error("synth: pool_mix weights must be non-negative");
    mix_total += pool_mix[t];
    if (pool_mix[t] > 0 && pools[t].empty()) throw config_error("synth: empty vocabulary for a sampled tier");
  }
  if (!(mix_total > 0)) throw config_error("synth: pool_mix must have positive total weight");
}

std::array<std::vector<std::string>, 3> load_seed_pools(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open seed_pools file " + path.string());
  std::array<std::vector<std::string>, 3> pools;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tier;
    if (!(ss >> tier) || tier[0] == '#') continue;
    int t = tier == "easy" ? 0 : tier == "medium" ? 1 : tier == "hard" ? 2 : -1;
    if (t < 0) throw config_error("seed_pools: unknown tier '" + tier + "'");
    for (std::string w; ss >> w;) pools[static_cast<std::size_t>(t)].push_back(w);
  }
  return pools;
}

SynthConfig load_synth_config(const fs::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const std::exception& e) {
    throw config_error(std::string("synth config: ") + e.what());
  }
  SynthConfig c = SynthConfig::defaults();
  try {
    c.n_projects = tree.get<int>("synth.n_projects", c.n_projects);
    c.late_rate = tree.get<double>("synth.late_rate", c.late_rate);
    c.noise = tree.get<double>("synth.noise", c.noise);
    c.duration_fraction = tree.get<double>("synth.duration_fraction", c.duration_fraction);
  } catch (const std::exception& e) {
    throw config_error(std::string("synth config: ") + e.what());
  }
  const auto pools = tree.get<std::string>("synth.seed_pools", "default");
  if (pools != "default") {
    fs::path p = pools;
    if (p.is_relative()) p = path.parent_path() / p;
    c.pools = load_seed_pools(p);
  }
  if (auto mix = tree.get_optional<std::string>("synth.pool_mix")) {
    std::replace(mix->begin(), mix->end(), ',', ' ');
    std::istringstream ss(*mix);
    for (auto& w : c.pool_mix)
      if (!(ss >> w)) throw config_error("synth: pool_mix needs three weights");
  }
  c.validate();
  return c;
}

Corpus generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  const double threshold = calibrate_threshold(config);
  std::mt19937_64 rng(mix_seed(seed));

  std::vector<ProjectRecord> projects;
  std::vector<ActivityEvent> events;
  std::vector<DeliveryLabel> labels;
  projects.reserve(static_cast<std::size_t>(config.n_projects));

  for (int i = 0; i < config.n_projects; ++i) {
    const Skeleton sk = draw_skeleton(rng, config.pool_mix);
    const double score = sk.score();
    const double pressure = sigmoid(score - threshold);  // drives backer worry and problem talk
    const double dil01 = (sk.diligence + 1.0) / 2.0;

    ProjectRecord p;
    p.id = "p" + std::to_string(i + 1);
    p.category = std::string(kCategories[static_cast<std::size_t>(sk.category)]);
    p.goal = std::max(100.0, std::round(std::lognormal_distribution<double>(std::log(8000.0), 1.0)(rng)));
    p.pledged = std::round(p.goal * uniform(rng, 1.0, 2.5));
    p.successful = true;
    p.launch_ts = kEpochBase + static_cast<std::int64_t>(uniform(rng, 0, 5 * 365)) * kDay;
    static const std::array<int, 6> kDurations = {20, 30, 30, 30, 45, 60};
    const int fund_days = kDurations[static_cast<std::size_t>(uniform_int(rng, 0, 5))];
    p.deadline_ts = p.launch_ts + fund_days * kDay;
    p.images_count = poisson(rng, 6);
    p.faqs_count = poisson(rng, 1.5);
    p.creator_backed_count = poisson(rng, 4);
    p.creator_created_count = 1 + poisson(rng, 0.6);

    std::string desc;
    const int n_sent = uniform_int(rng, 3, 8);
    for (int s = 0; s < n_sent; ++s) desc += (s ? " " : "") + sentence(rng, kProse, 6, 14);
    p.project_description = desc;
    p.bio_description = sentence(rng, kProse, 5, 10) + " " + sentence(rng, kProse, 5, 10);

    static const std::array<std::pair<int, int>, 3> kPromise = {{{20, 75}, {45, 150}, {90, 300}}};
    for (std::size_t r = 0; r < sk.tiers.size(); ++r) {
      const auto tier = static_cast<std::size_t>(sk.tiers[r]);
      RewardRecord w;
      w.id = p.id + "-r" + std::to_string(r + 1);
      std::vector<std::string> words;
      const int n_words = uniform_int(rng, 3, 6);
      for (int k = 0; k < n_words; ++k) words.push_back(pick(rng, config.pools[tier]));
      std::string text = pick(rng, kFiller);
      text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
      for (const auto& wd : words) text += " " + wd;
      text += ".";
      if (uniform(rng, 0, 1) < 0.4) text += " " + sentence(rng, config.pools[tier], 2, 4);
      w.description = text;
      w.pledge_amount = std::round(5.0 * std::pow(2.0, static_cast<double>(tier) + uniform(rng, 0, 3)));
      w.estimated_delivery_ts =
          p.deadline_ts + uniform_int(rng, kPromise[tier].first, kPromise[tier].second) * kDay;
      w.backer_count = sk.backers[r];
      p.rewards.push_back(std::move(w));
    }

    std::int64_t total_backers = 0;
    for (auto b : sk.backers) total_backers += b;
    const int n_backer_ids = static_cast<int>(std::clamp<std::int64_t>(total_backers, 1, 60));
    auto backer_id = [&] { return p.id + "-b" + std::to_string(uniform_int(rng, 1, n_backer_ids)); };
    const std::string creator_id = p.id + "-c";

    auto add = [&](AuthorRole role, const std::string& author, EventKind kind, std::int64_t ts, std::string text) {
      events.push_back({p.id, role, author, kind, ts, std::move(text)});
    };
    auto creator_reply_to = [&](std::int64_t q_ts) {
      if (uniform(rng, 0, 1) >= 0.3 + 0.6 * dil01) return;
      const double mean_days = 0.3 + 2.5 * (1.0 - dil01);
      const auto latency = static_cast<std::int64_t>(std::exponential_distribution<double>(1.0 / mean_days)(rng) * kDay);
      add(AuthorRole::Creator, creator_id, EventKind::Comment, q_ts + 60 + latency,
          mixed_text(rng, kProgressWords, kProblemWords, pressure, kCreatorNeutral, uniform_int(rng, 4, 9)));
    };
    auto backer_comment = [&](std::int64_t ts, double q_prob, double worry) {
      const bool question = uniform(rng, 0, 1) < q_prob;
      std::string text = mixed_text(rng, kBackerHappy, kBackerWorried, worry, kCreatorNeutral, uniform_int(rng, 3, 8));
      if (question) text += "?";
      add(AuthorRole::Backer, backer_id(), EventKind::Comment, ts, std::move(text));
      if (question) creator_reply_to(ts);
    };
    auto at = [&](std::int64_t lo, std::int64_t hi) {
      return lo + static_cast<std::int64_t>(uniform(rng, 0, static_cast<double>(hi - lo)));
    };

    // Fundraising phase.
    for (int k = poisson(rng, 4.0); k > 0; --k) backer_comment(at(p.launch_ts, p.deadline_ts), 0.2, 0.2);
    for (int k = poisson(rng, 1.0 + 5.0 * dil01); k > 0; --k)
      add(AuthorRole::Creator, creator_id, EventKind::Comment, at(p.launch_ts, p.deadline_ts),
          mixed_text(rng, kProgressWords, kProblemWords, pressure, kCreatorNeutral, uniform_int(rng, 4, 9)));
    for (int k = poisson(rng, 0.5 + 3.0 * dil01); k > 0; --k)
      add(AuthorRole::Creator, creator_id, EventKind::Update, at(p.launch_ts, p.deadline_ts),
          mixed_text(rng, kProgressWords, kProblemWords, pressure, kCreatorNeutral, uniform_int(rng, 8, 16)));

    // Early delivery phase, covering the TP4 window and a little beyond.
    const double horizon_days = static_cast<double>(p.ledd() - p.deadline_ts) / kDay;
    const std::int64_t post_end = p.deadline_ts + static_cast<std::int64_t>(0.10 * horizon_days * kDay);
    const double post_days = 0.10 * horizon_days;
    for (int k = poisson(rng, post_days * (0.03 + 0.30 * dil01)); k > 0; --k)
      add(AuthorRole::Creator, creator_id, EventKind::Update, at(p.deadline_ts, post_end),
          mixed_text(rng, kProgressWords, kProblemWords, pressure, kCreatorNeutral, uniform_int(rng, 8, 16)));
    for (int k = poisson(rng, post_days * (0.05 + 0.30 * dil01)); k > 0; --k)
      add(AuthorRole::Creator, creator_id, EventKind::Comment, at(p.deadline_ts, post_end),
          mixed_text(rng, kProgressWords, kProblemWords, pressure, kCreatorNeutral, uniform_int(rng, 4, 9)));
    for (int k = poisson(rng, post_days * (0.2 + 0.5 * pressure)); k > 0; --k)
      backer_comment(at(p.deadline_ts, post_end), 0.2 + 0.5 * pressure, pressure);

    bool late = score > threshold;
    if (uniform(rng, 0, 1) < config.noise) late = !late;
    DeliveryLabel label{p.id, late ? DeliveryStatus::Late : DeliveryStatus::OnTime, std::nullopt};
    const double log_days = std::log(55.0) + 0.45 * sk.difficulty() - 0.35 * sk.diligence +
                            std::normal_distribution<double>(0.0, 0.2)(rng);
    if (uniform(rng, 0, 1) < config.duration_fraction) label.actual_duration_days = std::round(std::exp(log_days) * 10) / 10;
    labels.push_back(std::move(label));
    projects.push_back(std::move(p));
  }
  return Corpus(std::move(projects), std::move(events), std::move(labels));
}

}  // namespace fulfillkit
