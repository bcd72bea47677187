#include "masszz/prompts.hpp"

#include "masszz/error.hpp"

#include <fstream>
#include <sstream>

#ifndef MASSZZ_PROMPT_DIR
#define MASSZZ_PROMPT_DIR "prompts/v1"
#endif

namespace masszz {

PromptLibrary::PromptLibrary(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_)) {
        throw Error(ErrorKind::InvalidArgument, "prompt directory not found: " + dir_.string());
    }
}

std::filesystem::path PromptLibrary::default_dir() { return MASSZZ_PROMPT_DIR; }

std::string PromptLibrary::render(std::string_view name, const std::map<std::string, std::string>& vars) const {
    auto path = dir_ / (std::string(name) + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::InvalidArgument, "missing prompt template " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return render_template(buf.str(), vars);
    } catch (const Error& e) {
        throw Error(ErrorKind::InvalidArgument, path.filename().string() + ": " + e.what());
    }
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    auto lookup = [&](const std::string& key) -> const std::string& {
        auto it = vars.find(key);
        if (it == vars.end()) throw Error(ErrorKind::InvalidArgument, "template variable '" + key + "' not supplied");
        return it->second;
    };
    std::string out;
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) throw Error(ErrorKind::InvalidArgument, "unterminated '{{'");
        std::string tag(tmpl.substr(open + 2, close - open - 2));
        pos = close + 2;
        if (!tag.empty() && tag.front() == '#') {
            std::string key = tag.substr(1);
            std::string end_tag = "{{/" + key + "}}";
            auto end = tmpl.find(end_tag, pos);
            if (end == std::string_view::npos) throw Error(ErrorKind::InvalidArgument, "section '" + key + "' not closed");
            if (!lookup(key).empty()) out += render_template(tmpl.substr(pos, end - pos), vars);
            pos = end + end_tag.size();
            // a section on its own line should not leave a blank line behind
            if (lookup(key).empty() && pos < tmpl.size() && tmpl[pos] == '\n' && (out.empty() || out.back() == '\n')) ++pos;
        } else {
            out += lookup(tag);
        }
    }
    return out;
}

}  // namespace masszz
