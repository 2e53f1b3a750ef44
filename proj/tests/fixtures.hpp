#pragma once

#include <string>
#include <vector>

#include "fulfillkit/corpus.hpp"

namespace testsupport {

inline constexpr std::int64_t kDay = 86400;
inline constexpr std::int64_t kLaunch = 1400000000;

inline fulfillkit::RewardRecord make_reward(const std::string& id, const std::string& text, std::int64_t backers = 1,
                                            std::int64_t delivery = kLaunch + 90 * kDay) {
  fulfillkit::RewardRecord r;
  r.id = id;
  r.description = text;
  r.pledge_amount = 25;
  r.estimated_delivery_ts = delivery;
  r.backer_count = backers;
  return r;
}

inline fulfillkit::ProjectRecord make_project(const std::string& id, double goal = 1000, bool successful = true) {
  fulfillkit::ProjectRecord p;
  p.id = id;
  p.category = "Games";
  p.goal = goal;
  p.pledged = goal * 1.5;
  p.successful = successful;
  p.launch_ts = kLaunch;
  p.deadline_ts = kLaunch + 30 * kDay;
  p.images_count = 3;
  p.faqs_count = 1;
  p.project_description = "A board game about ships. It ships in spring.";
  p.bio_description = "We design games.";
  p.rewards = {make_reward(id + "-r1", "signed copy of the game"), make_reward(id + "-r2", "deluxe box with poster")};
  p.creator_backed_count = 2;
  p.creator_created_count = 1;
  return p;
}

inline fulfillkit::ActivityEvent make_event(const std::string& project, fulfillkit::AuthorRole role,
                                            fulfillkit::EventKind kind, std::int64_t ts, const std::string& text,
                                            const std::string& author = "") {
  fulfillkit::ActivityEvent e;
  e.project_id = project;
  e.author_role = role;
  e.author_id = author.empty() ? (role == fulfillkit::AuthorRole::Creator ? project + "-c" : "b") : author;
  e.kind = kind;
  e.ts = ts;
  e.text = text;
  return e;
}

}  // namespace testsupport
