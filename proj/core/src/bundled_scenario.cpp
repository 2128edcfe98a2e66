#include <cmath>
#include <string>

#include "mixrl/reward.hpp"
#include "mixrl/toy_trainer.hpp"

namespace mixrl::toy {

namespace {
constexpr const char* kObjects[] = {"cubes", "spheres", "cylinders", "apples", "birds", "cars", "books", "chairs"};
}

Scenario bundled_pseudo_path_scenario(std::size_t num_queries) {
  Scenario scenario;
  scenario.open_beta = reward::kDefaultOpenBeta;
  // Score gap that maps to an open-ended reward of exactly 1 - 0.7 = 0.3.
  const double pseudo_gap = -std::log(0.7) / scenario.open_beta;

  for (std::size_t i = 0; i < num_queries; ++i) {
    const std::string obj = kObjects[i % std::size(kObjects)];
    const int total = static_cast<int>(3 + (i * 7) % 11);
    const std::string n = std::to_string(total);
    ScenarioQuery q;
    q.sample.id = "q" + std::string(i < 10 ? "0" : "") + std::to_string(i);
    q.sample.question = "How many " + obj + " are in the image in total, and how do you know?";
    q.sample.image_ref = "scene_" + std::to_string(i) + ".png";
    q.sample.source = "bundled";
    q.sample.task = TaskKind::OpenEnded;
    q.sample.gold = "There are " + n + " " + obj + ".";
    q.reference_score = 0.0;
    q.expert = kPseudoPathCandidate;

    q.candidates = {
        {"<think>Count each group of " + obj + " and add.</think> There are " + n + " " + obj + " in total.",
         100.0, {}},
        {"<think>The caption says there are several " + obj +
             " in the picture. Wait, let me double-check the description again. Hmm, the caption "
             "mentions two groups, so I should confirm by re-reading the caption carefully. "
             "Alternatively the description implies a few more, so let me check once more before "
             "I conclude with the count from the caption.</think> After careful checking of the "
             "caption, there are " + std::to_string(total + 2) + " " + obj + " in the image.",
         pseudo_gap, {}},
        {"There are " + n + " " + obj + " in total.", std::nullopt, {}},
        {"<think>Count each group of " + obj + " and add. There are " + n + " " + obj + ".", std::nullopt, {}},
        {"<think>Count the " + obj + ".</think> There are " + std::to_string(total + 1) + " " + obj + ".",
         -1.0, {}},
        {"<think>Count the " + obj + ".</think> There are " + std::to_string(total - 1) + " " + obj + ".",
         -1.0, {}},
        {"<think>Estimate roughly.</think> Maybe " + std::to_string(total * 2) + " " + obj + ".", -1.0, {}},
        {"<think>Look at the image.</think> I cannot tell how many " + obj + " there are.", -1.0, {}},
    };
    scenario.queries.push_back(std::move(q));
  }
  scenario.finalize();
  return scenario;
}

}  // namespace mixrl::toy
