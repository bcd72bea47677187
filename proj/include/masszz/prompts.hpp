#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace masszz {

/// Prompt templates loaded from `<dir>/<name>.txt`.
///
/// `{{var}}` is replaced by the variable's value. `{{#var}}...{{/var}}` keeps
/// its body only when `var` is non-empty. Referencing a variable that was not
/// supplied throws InvalidArgument.
class PromptLibrary {
public:
    explicit PromptLibrary(std::filesystem::path dir);

    static std::filesystem::path default_dir();

    const std::filesystem::path& dir() const noexcept { return dir_; }

    std::string render(std::string_view name, const std::map<std::string, std::string>& vars) const;

private:
    std::filesystem::path dir_;
};

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

}  // namespace masszz
