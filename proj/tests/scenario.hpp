#pragma once

// Three-task fixture benchmark: t1 searches then answers correctly, t2
// answers correctly at once, t3 answers wrongly.

#include "test_support.hpp"

namespace testing_support {

inline std::vector<Task> scenario_tasks() {
    return {make_task("t1", 1, "What is six times seven?", "42"),
            make_task("t2", 2, "What is the capital of France?", "Paris"),
            make_task("t3", 3, "When did the Eiffel Tower open?", "1889")};
}

inline Script scenario_script() {
    Script s;
    s.add(Purpose::Planner, "1. search\n2. answer", {}, 210, 12, true);
    s.add(Purpose::Actor, "I should look this up.\nACTION: search(query=\"six times seven\")", at_step(0), 830, 41,
          false, "t1");
    s.add(Purpose::QueryExpansion, "1. six times seven\n2. 6 x 7", {}, 95, 17, false, "t1");
    s.add(Purpose::Actor, final_answer("42"), at_step(1), 1290, 33, false, "t1");
    s.add(Purpose::Actor, final_answer("paris"), at_step(0), 777, 25, false, "t2");
    s.add(Purpose::Actor, final_answer("1887"), at_step(0), 901, 29, false, "t3");
    return s;
}

inline void write_scenario_fixtures(const fs::path& dir) {
    write_search_fixture(dir, "google", "six times seven",
                         {{"Multiplication", "https://math.example/mult#six", "six times seven equals 42"}});
    write_search_fixture(dir, "wikipedia", "6 x 7", {{"42 (number)", "https://wiki.example/42", "42 is 6 x 7"}});
}

}  // namespace testing_support
