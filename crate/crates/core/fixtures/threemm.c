/* 3mm: G = (A*B) * (C*D), three chained matrix products. */
#include <stdio.h>

#define NI 1000
#define NJ 1000
#define NK 1000
#define NL 1000
#define NM 1000

static double A[NI][NK], B[NK][NJ], C[NJ][NM], D[NM][NL];
static double E[NI][NJ], F[NJ][NL], G[NI][NL];

static void init_array(void)
{
    for (int i = 0; i < NI; i++)
        for (int j = 0; j < NK; j++)
            A[i][j] = (double)((i * j + 1) % NI) / (5 * NI);
    for (int i = 0; i < NK; i++)
        for (int j = 0; j < NJ; j++)
            B[i][j] = (double)((i * (j + 1) + 2) % NJ) / (5 * NJ);
    for (int i = 0; i < NJ; i++)
        for (int j = 0; j < NM; j++)
            C[i][j] = (double)(i * (j + 3) % NL) / (5 * NL);
    for (int i = 0; i < NM; i++)
        for (int j = 0; j < NL; j++)
            D[i][j] = (double)((i * (j + 2) + 2) % NK) / (5 * NK);
}

static void kernel_3mm(void)
{
    /* E := A*B */
    for (int i = 0; i < NI; i++)
        for (int j = 0; j < NJ; j++) {
            E[i][j] = 0.0;
            for (int k = 0; k < NK; ++k)
                E[i][j] += A[i][k] * B[k][j];
        }
    /* F := C*D */
    for (int i = 0; i < NJ; i++)
        for (int j = 0; j < NL; j++) {
            F[i][j] = 0.0;
            for (int k = 0; k < NM; ++k)
                F[i][j] += C[i][k] * D[k][j];
        }
    /* G := E*F */
    for (int i = 0; i < NI; i++)
        for (int j = 0; j < NL; j++) {
            G[i][j] = 0.0;
            for (int k = 0; k < NJ; ++k)
                G[i][j] += E[i][k] * F[k][j];
        }
}

static void scale_result(double alpha)
{
    double *g = &G[0][0];
    for (int n = 0; n < NI * NL; n++)
        g[n] = alpha * g[n];
}

static void print_array(void)
{
    for (int i = 0; i < NI; i++)
        for (int j = 0; j < NL; j++) {
            fprintf(stderr, "%0.2lf ", G[i][j]);
            if ((i * NI + j) % 20 == 0)
                fprintf(stderr, "\n");
        }
}

int main(void)
{
    init_array();
    kernel_3mm();
    scale_result(1.0);
    print_array();
    return 0;
}
