/*
 * Classify one document with a saved checkpoint.
 *
 *   cargo build --release -p texting-ffi
 *   cc crates/ffi/examples/predict.c -Icrates/ffi/include \
 *      target/release/libtexting_ffi.a -lpthread -ldl -lm -o predict
 *   ./predict out/checkpoint_seed0_local "a gripping and moving film"
 */
#include <stdio.h>
#include <stdlib.h>

#include "texting.h"

int main(int argc, char **argv) {
    if (argc != 3) {
        fprintf(stderr, "usage: %s <checkpoint-dir> <text>\n", argv[0]);
        return 2;
    }

    TextingModel *model = NULL;
    if (texting_model_load(argv[1], &model) != TEXTING_STATUS_OK) {
        fprintf(stderr, "load: %s\n", texting_last_error_message());
        return 1;
    }

    TextingEmbeddings *emb = NULL;
    TextingStatus st = texting_embeddings_random(texting_model_input_dim(model),
                                                 texting_model_oov_seed(model), &emb);
    if (st != TEXTING_STATUS_OK) {
        fprintf(stderr, "embeddings: %s\n", texting_last_error_message());
        texting_model_free(model);
        return 1;
    }

    size_t n = texting_model_num_classes(model);
    float *probs = calloc(n, sizeof(float));
    st = texting_model_predict(model, emb, argv[2], 0, probs, n);
    if (st == TEXTING_STATUS_OK) {
        for (size_t i = 0; i < n; i++) {
            printf("%s\t%.4f\n", texting_model_class_name(model, i), probs[i]);
        }
    } else {
        fprintf(stderr, "predict (%d): %s\n", (int)st, texting_last_error_message());
    }

    free(probs);
    texting_embeddings_free(emb);
    texting_model_free(model);
    return st == TEXTING_STATUS_OK ? 0 : 1;
}
