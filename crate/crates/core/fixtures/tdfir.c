/* Time-domain FIR filter bank over complex samples. */
#include <stdio.h>
#include <stdlib.h>

#define FILTERS 64
#define TAPS 128
#define LEN 4096

static void tdFir(const float *x, const float *h, float *y, int filters, int taps, int len)
{
    int out_len = 2 * (len + taps - 1);
    for (int f = 0; f < filters; f++) {
        float *yf = y + f * out_len;
        const float *hf = h + f * 2 * taps;
        for (int k = 0; k < out_len; k++)
            yf[k] = 0.0f;
        for (int i = 0; i < len; i++) {
            const float xr = x[2 * i];
            const float xi = x[2 * i + 1];
            for (int j = 0; j < taps; j++) {
                yf[2 * (i + j)] += xr * hf[2 * j] - xi * hf[2 * j + 1];
                yf[2 * (i + j) + 1] += xr * hf[2 * j + 1] + xi * hf[2 * j];
            }
        }
    }
}

int main(void)
{
    int out_len = 2 * (LEN + TAPS - 1);
    float *x = malloc(sizeof(float) * 2 * LEN);
    float *h = malloc(sizeof(float) * 2 * TAPS * FILTERS);
    float *y = malloc(sizeof(float) * out_len * FILTERS);

    for (int f = 0; f < FILTERS * 2 * TAPS; f++)
        h[f] = (float)(f % 7) / 7.0f;
    for (int n = 0; n < 2 * LEN; n++)
        x[n] = (float)(n % 13) / 13.0f;

    tdFir(x, h, y, FILTERS, TAPS, LEN);

    printf("%f %f\n", y[0], y[out_len * FILTERS - 1]);
    free(x);
    free(h);
    free(y);
    return 0;
}
