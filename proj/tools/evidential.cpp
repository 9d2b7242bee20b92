// Command-line front end: one-shot subcommands plus a REPL sharing the same
// grammar.

#include <iostream>
#include <string>
#include <vector>

#include "evidential/evidential.hpp"

namespace {

void print_usage(std::ostream& out) {
    out << "usage: evidential <command> [options]\n"
           "\n"
           "commands:\n"
           "  load <net>                              validate and load a network document\n"
           "  save <net> [--net <file>]               write the canonical document\n"
           "  show-rules <node> [--net <file>]        print the node's rule beam\n"
           "  marginal <var> [--given \"<expr>\"]       marginal of one variable\n"
           "  query \"<expr>\" [--given \"<expr>\"]       probability / belief of an event\n"
           "  validate-rule \"if .. then ..\"           3-valued rule validity\n"
           "  mpe [--given \"<expr>\"] [--hypothesize var=value] [--explain var] [--normalized]\n"
           "  dsep <J> <K> <L>                        d-separation ('-' for an empty set)\n"
           "  estimate --data <csv> --dag <net> [--smoothing s] --out <net>\n"
           "  repl                                    interactive loop; 'quit' exits\n"
           "\n"
           "Network-consuming commands accept --net <file>; --verbose prints '#'-prefixed\n"
           "diagnostics (join-tree structure, gate nodes) for the rest of the session.\n"
           "EVIDENTIAL_CAPACITY overrides the frame capacity (configurations).\n";
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    evidential::Session session;
    if (args.empty() || args[0] == "help" || args[0] == "--help") {
        print_usage(args.empty() ? std::cerr : std::cout);
        return args.empty() ? 2 : 0;
    }
    if (args[0] == "repl") {
        if (args.size() >= 3 && args[1] == "--net") {
            std::vector<std::string> load_cmd{"load", args[2]};
            int rc = evidential::execute_command(session, load_cmd, std::cout, std::cerr);
            if (rc != 0) return rc;
        }
        return evidential::repl_loop(session, std::cin, std::cout);
    }
    return evidential::execute_command(session, args, std::cout, std::cerr);
}
