#include <safegrid/cli.hpp>

int main(int argc, char** argv)
{
    return safegrid::run_cli(argc, argv);
}
