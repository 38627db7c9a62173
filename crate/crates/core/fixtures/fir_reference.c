/* Reference body used to recognize FIR filter banks by similarity. */
void fir_bank(const float *in, const float *coef, float *out, int nfilt, int ntap, int n)
{
    int olen = 2 * (n + ntap - 1);
    for (int b = 0; b < nfilt; b++) {
        float *ob = out + b * olen;
        const float *cb = coef + b * 2 * ntap;
        for (int q = 0; q < olen; q++)
            ob[q] = 0.0f;
        for (int s = 0; s < n; s++) {
            const float re = in[2 * s];
            const float im = in[2 * s + 1];
            for (int t = 0; t < ntap; t++) {
                ob[2 * (s + t)] += re * cb[2 * t] - im * cb[2 * t + 1];
                ob[2 * (s + t) + 1] += re * cb[2 * t + 1] + im * cb[2 * t];
            }
        }
    }
}
