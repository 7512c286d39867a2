#ifndef PROFBO_SUBPROCESS_HPP
#define PROFBO_SUBPROCESS_HPP

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "profbo/blackbox.hpp"

namespace profbo {

/// Long-lived child process speaking the line protocol: one whitespace
/// separated d-vector per request on stdin, one scalar response line on
/// stdout. The child stays up across evaluations; it is terminated when the
/// handle is destroyed. Not thread-safe; use one child per worker.
class SubprocessEvaluator {
public:
    explicit SubprocessEvaluator(const std::vector<std::string>& command) {
        if (command.empty()) throw invalid_argument("SubprocessEvaluator: empty command");
        int to_child[2], from_child[2];
        if (pipe(to_child) != 0 || pipe(from_child) != 0)
            throw io_error("SubprocessEvaluator: pipe() failed");
        pid_ = fork();
        if (pid_ < 0) throw io_error("SubprocessEvaluator: fork() failed");
        if (pid_ == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]); close(to_child[1]);
            close(from_child[0]); close(from_child[1]);
            std::vector<char*> argv;
            for (const auto& a : command) argv.push_back(const_cast<char*>(a.c_str()));
            argv.push_back(nullptr);
            execvp(argv[0], argv.data());
            std::perror("execvp");
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        in_ = fdopen(to_child[1], "w");
        out_ = fdopen(from_child[0], "r");
        if (!in_ || !out_) throw io_error("SubprocessEvaluator: fdopen() failed");
        command_ = command;
    }

    ~SubprocessEvaluator() {
        if (in_) std::fclose(in_);
        if (out_) std::fclose(out_);
        if (pid_ > 0) {
            int status = 0;
            waitpid(pid_, &status, 0);
        }
    }

    SubprocessEvaluator(const SubprocessEvaluator&) = delete;
    SubprocessEvaluator& operator=(const SubprocessEvaluator&) = delete;

    double eval(const Eigen::VectorXd& x) {
        std::ostringstream line;
        char buf[32];
        for (int j = 0; j < x.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", x[j]);
            if (j) line << ' ';
            line << buf;
        }
        line << '\n';
        const std::string s = line.str();
        if (std::fputs(s.c_str(), in_) == EOF || std::fflush(in_) != 0)
            throw io_error("SubprocessEvaluator: child closed stdin (" + command_[0] + ")");
        char reply[256];
        if (!std::fgets(reply, sizeof(reply), out_))
            throw io_error("SubprocessEvaluator: child produced no output (" + command_[0] + ")");
        char* end = nullptr;
        const double v = std::strtod(reply, &end);
        if (end == reply)
            throw io_error(std::string("SubprocessEvaluator: unparsable reply: ") + reply);
        return v;
    }

private:
    pid_t pid_ = -1;
    std::FILE* in_ = nullptr;
    std::FILE* out_ = nullptr;
    std::vector<std::string> command_;
};

/// External simulator as a BlackBox: the driver sends native-domain
/// coordinates, the child replies with the response value.
inline BlackBox make_subprocess_blackbox(const std::vector<std::string>& command,
                                         const std::string& name, int dim, int control_index,
                                         const Eigen::MatrixX2d& native_bounds) {
    if (static_cast<int>(native_bounds.rows()) != dim)
        throw invalid_argument("make_subprocess_blackbox: bounds rows must equal dim");
    BlackBox f;
    f.name = name;
    f.dim = dim;
    f.control_index = control_index;
    f.native_bounds = native_bounds;
    auto child = std::make_shared<SubprocessEvaluator>(command);
    f.eval_native = [child](const Eigen::VectorXd& x) { return child->eval(x); };
    return f;
}

} // namespace profbo

#endif
