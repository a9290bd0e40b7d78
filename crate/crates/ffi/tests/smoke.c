#include <stdio.h>
#include <string.h>
#include "rdrqa.h"

int main(int argc, char **argv) {
    if (argc < 2) return 10;
    RdrqaEngine *engine = NULL;
    if (rdrqa_engine_load(argv[1], &engine) != RDRQA_STATUS_OK) {
        fprintf(stderr, "load: %s\n", rdrqa_last_error());
        return 11;
    }
    char *json = NULL;
    RdrqaStatus s = rdrqa_analyze(engine, "In/IN which/WDT projects/NNS is/VBZ enrico/NNP motta/NNP working/VBG on/IN ?/.", -1, &json);
    if (s != RDRQA_STATUS_OK) return 12;
    if (strstr(json, "\"last_fired\":2") == NULL) return 13;
    rdrqa_string_free(json);
    if (rdrqa_analyze(engine, "", -1, &json) != RDRQA_STATUS_INVALID_INPUT) return 14;
    if (rdrqa_last_error() == NULL) return 15;
    rdrqa_engine_free(engine);
    printf("ok %s\n", rdrqa_version());
    return 0;
}
