#include <cstdio>

int main() {
    std::puts("locsep: subcommands not wired up yet");
    return 0;
}
