#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::string corpus_path(const std::string& name) {
    return std::string(DDTEP_CORPUS_DIR) + "/" + name;
}

inline std::string corpus_file(const std::string& name) {
    return read_file(corpus_path(name));
}

inline const std::vector<std::string>& corpus_programs() {
    static const std::vector<std::string> names = {
        "car.ddtep",          "cake.ddtep",         "cake_people.ddtep",
        "cake_likes.ddtep",   "cake_likes_costly_ask.ddtep",
        "burning_room.ddtep", "archives.ddtep",     "archives_learn.ddtep",
    };
    return names;
}
