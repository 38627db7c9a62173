/* Block tri-diagonal solver in the style of the NAS BT benchmark. */
#include <math.h>
#include <stdio.h>

#define NX 64
#define NY 64
#define NZ 64
#define DT 0.0008

static double u[5][NZ][NY][NX];
static double rhs[5][NZ][NY][NX];
static double forcing[5][NZ][NY][NX];
static double lhs[5][NZ][NY][NX];
static double us[5][NZ][NY][NX];
static double vs[5][NZ][NY][NX];
static double ws[5][NZ][NY][NX];
static double qs[5][NZ][NY][NX];
static double rho_i[5][NZ][NY][NX];
static double square[5][NZ][NY][NX];
static double norm[20];

static void compute_rhs(void)
{
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                vs[0][k][j][i] = vs[0][k][j][i] + DT * (forcing[0][k + 1][j][i] - 2.0 * ws[0][k][j][i] + forcing[0][k - 1][j][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                rhs[1][k][j][i] = rhs[1][k][j][i] - DT * (rho_i[1][k][j + 1][i] - 2.0 * square[1][k][j][i] + rho_i[1][k][j - 1][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                square[2][k][j][i] = square[2][k][j][i] + DT * (u[2][k][j][i + 1] - 2.0 * lhs[2][k][j][i] + u[2][k][j][i - 1]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                rhs[3][k][j][i] = rhs[3][k][j][i] + DT * (ws[3][k + 1][j][i] - 2.0 * rho_i[3][k][j][i] + ws[3][k - 1][j][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                lhs[4][k][j][i] = lhs[4][k][j][i] + DT * (rhs[4][k][j + 1][i] - 2.0 * ws[4][k][j][i] + rhs[4][k][j - 1][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                square[0][k][j][i] = square[0][k][j][i] + DT * (rhs[0][k][j][i + 1] - 2.0 * lhs[0][k][j][i] + rhs[0][k][j][i - 1]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                square[1][k][j][i] = square[1][k][j][i] + DT * (ws[1][k + 1][j][i] - 2.0 * u[1][k][j][i] + ws[1][k - 1][j][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                u[2][k][j][i] = u[2][k][j][i] - DT * (rho_i[2][k][j + 1][i] - 2.0 * forcing[2][k][j][i] + rho_i[2][k][j - 1][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                ws[3][k][j][i] = ws[3][k][j][i] - DT * (forcing[3][k][j][i + 1] - 2.0 * rhs[3][k][j][i] + forcing[3][k][j][i - 1]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                rho_i[4][k][j][i] = rho_i[4][k][j][i] + DT * (forcing[4][k + 1][j][i] - 2.0 * rhs[4][k][j][i] + forcing[4][k - 1][j][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                vs[0][k][j][i] = vs[0][k][j][i] + DT * (rhs[0][k][j + 1][i] - 2.0 * rho_i[0][k][j][i] + rhs[0][k][j - 1][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                square[1][k][j][i] = square[1][k][j][i] - DT * (lhs[1][k][j][i + 1] - 2.0 * qs[1][k][j][i] + lhs[1][k][j][i - 1]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                vs[2][k][j][i] = vs[2][k][j][i] - DT * (qs[2][k + 1][j][i] - 2.0 * rho_i[2][k][j][i] + qs[2][k - 1][j][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                us[3][k][j][i] = us[3][k][j][i] + DT * (lhs[3][k][j + 1][i] - 2.0 * forcing[3][k][j][i] + lhs[3][k][j - 1][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                rhs[4][k][j][i] = rhs[4][k][j][i] - DT * (us[4][k][j][i + 1] - 2.0 * qs[4][k][j][i] + us[4][k][j][i - 1]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                qs[0][k][j][i] = qs[0][k][j][i] + DT * (us[0][k + 1][j][i] - 2.0 * rhs[0][k][j][i] + us[0][k - 1][j][i]);
}

static void x_solve(void)
{
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                rho_i[0][k][j][i] = rho_i[0][k][j][i] - DT * (ws[0][k][j + 1][i] - 2.0 * forcing[0][k][j][i] + ws[0][k][j - 1][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                forcing[1][k][j][i] = forcing[1][k][j][i] + DT * (qs[1][k][j][i + 1] - 2.0 * ws[1][k][j][i] + qs[1][k][j][i - 1]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                rhs[2][k][j][i] = rhs[2][k][j][i] - DT * (rho_i[2][k + 1][j][i] - 2.0 * vs[2][k][j][i] + rho_i[2][k - 1][j][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                vs[3][k][j][i] = vs[3][k][j][i] + DT * (qs[3][k][j + 1][i] - 2.0 * rho_i[3][k][j][i] + qs[3][k][j - 1][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                rhs[4][k][j][i] = rhs[4][k][j][i] + DT * (us[4][k][j][i + 1] - 2.0 * qs[4][k][j][i] + us[4][k][j][i - 1]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                u[0][k][j][i] = u[0][k][j][i] - DT * (us[0][k + 1][j][i] - 2.0 * qs[0][k][j][i] + us[0][k - 1][j][i]);
}

static void y_solve(void)
{
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                ws[0][k][j][i] = ws[0][k][j][i] - DT * (vs[0][k][j + 1][i] - 2.0 * u[0][k][j][i] + vs[0][k][j - 1][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                vs[1][k][j][i] = vs[1][k][j][i] - DT * (forcing[1][k][j][i + 1] - 2.0 * rhs[1][k][j][i] + forcing[1][k][j][i - 1]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                u[2][k][j][i] = u[2][k][j][i] + DT * (lhs[2][k + 1][j][i] - 2.0 * us[2][k][j][i] + lhs[2][k - 1][j][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                lhs[3][k][j][i] = lhs[3][k][j][i] - DT * (ws[3][k][j + 1][i] - 2.0 * rho_i[3][k][j][i] + ws[3][k][j - 1][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                rhs[4][k][j][i] = rhs[4][k][j][i] - DT * (forcing[4][k][j][i + 1] - 2.0 * qs[4][k][j][i] + forcing[4][k][j][i - 1]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                rho_i[0][k][j][i] = rho_i[0][k][j][i] - DT * (us[0][k + 1][j][i] - 2.0 * forcing[0][k][j][i] + us[0][k - 1][j][i]);
}

static void z_solve(void)
{
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                rho_i[0][k][j][i] = rho_i[0][k][j][i] - DT * (us[0][k][j + 1][i] - 2.0 * ws[0][k][j][i] + us[0][k][j - 1][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                ws[1][k][j][i] = ws[1][k][j][i] + DT * (lhs[1][k][j][i + 1] - 2.0 * forcing[1][k][j][i] + lhs[1][k][j][i - 1]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                forcing[2][k][j][i] = forcing[2][k][j][i] + DT * (square[2][k + 1][j][i] - 2.0 * lhs[2][k][j][i] + square[2][k - 1][j][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                u[3][k][j][i] = u[3][k][j][i] - DT * (qs[3][k][j + 1][i] - 2.0 * forcing[3][k][j][i] + qs[3][k][j - 1][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                us[4][k][j][i] = us[4][k][j][i] - DT * (u[4][k][j][i + 1] - 2.0 * forcing[4][k][j][i] + u[4][k][j][i - 1]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                rho_i[0][k][j][i] = rho_i[0][k][j][i] + DT * (vs[0][k + 1][j][i] - 2.0 * square[0][k][j][i] + vs[0][k - 1][j][i]);
}

static void add(void)
{
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                rho_i[0][k][j][i] = rho_i[0][k][j][i] - DT * (u[0][k][j + 1][i] - 2.0 * qs[0][k][j][i] + u[0][k][j - 1][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                ws[1][k][j][i] = ws[1][k][j][i] + DT * (square[1][k][j][i + 1] - 2.0 * rho_i[1][k][j][i] + square[1][k][j][i - 1]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                qs[2][k][j][i] = qs[2][k][j][i] + DT * (ws[2][k + 1][j][i] - 2.0 * u[2][k][j][i] + ws[2][k - 1][j][i]);
}

static void initialize(void)
{
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                rhs[0][k][j][i] = rhs[0][k][j][i] + DT * (lhs[0][k][j + 1][i] - 2.0 * qs[0][k][j][i] + lhs[0][k][j - 1][i]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                rhs[1][k][j][i] = rhs[1][k][j][i] + DT * (vs[1][k][j][i + 1] - 2.0 * u[1][k][j][i] + vs[1][k][j][i - 1]);
    for (int k = 1; k < NZ - 1; k++)
        for (int j = 1; j < NY - 1; j++)
            for (int i = 1; i < NX - 1; i++)
                u[2][k][j][i] = u[2][k][j][i] - DT * (forcing[2][k + 1][j][i] - 2.0 * rhs[2][k][j][i] + forcing[2][k - 1][j][i]);
}

static void error_norm(void)
{
    double sum;
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + square[0][k][j][i] * square[0][k][j][i];
    norm[0] = sqrt(sum / (NX * NY * NZ));
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + u[1][k][j][i] * u[1][k][j][i];
    norm[1] = sqrt(sum / (NX * NY * NZ));
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + rhs[2][k][j][i] * rhs[2][k][j][i];
    norm[2] = sqrt(sum / (NX * NY * NZ));
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + lhs[3][k][j][i] * lhs[3][k][j][i];
    norm[3] = sqrt(sum / (NX * NY * NZ));
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + square[4][k][j][i] * square[4][k][j][i];
    norm[4] = sqrt(sum / (NX * NY * NZ));
}

static void rhs_norm(void)
{
    double sum;
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + ws[0][k][j][i] * ws[0][k][j][i];
    norm[5] = sqrt(sum / (NX * NY * NZ));
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + forcing[1][k][j][i] * forcing[1][k][j][i];
    norm[6] = sqrt(sum / (NX * NY * NZ));
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + us[2][k][j][i] * us[2][k][j][i];
    norm[7] = sqrt(sum / (NX * NY * NZ));
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + vs[3][k][j][i] * vs[3][k][j][i];
    norm[8] = sqrt(sum / (NX * NY * NZ));
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + square[4][k][j][i] * square[4][k][j][i];
    norm[9] = sqrt(sum / (NX * NY * NZ));
}

static void exact_norm(void)
{
    double sum;
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + vs[0][k][j][i] * vs[0][k][j][i];
    norm[10] = sqrt(sum / (NX * NY * NZ));
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + qs[1][k][j][i] * qs[1][k][j][i];
    norm[11] = sqrt(sum / (NX * NY * NZ));
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + rhs[2][k][j][i] * rhs[2][k][j][i];
    norm[12] = sqrt(sum / (NX * NY * NZ));
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + rhs[3][k][j][i] * rhs[3][k][j][i];
    norm[13] = sqrt(sum / (NX * NY * NZ));
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + qs[4][k][j][i] * qs[4][k][j][i];
    norm[14] = sqrt(sum / (NX * NY * NZ));
}

static void residual_norm(void)
{
    double sum;
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + qs[0][k][j][i] * qs[0][k][j][i];
    norm[15] = sqrt(sum / (NX * NY * NZ));
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + qs[1][k][j][i] * qs[1][k][j][i];
    norm[16] = sqrt(sum / (NX * NY * NZ));
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + qs[2][k][j][i] * qs[2][k][j][i];
    norm[17] = sqrt(sum / (NX * NY * NZ));
    sum = 0.0;
    for (int k = 0; k < NZ; k++)
        for (int j = 0; j < NY; j++)
            for (int i = 0; i < NX; i++)
                sum = sum + us[3][k][j][i] * us[3][k][j][i];
    norm[18] = sqrt(sum / (NX * NY * NZ));
}

static void verify(void)
{
    for (int c = 0; c < 19; c++)
        printf(" %2d %20.13e\n", c, norm[c]);
}

int main(void)
{
    initialize();
    for (int step = 0; step < 200; step++) {
        compute_rhs();
        x_solve();
        y_solve();
        z_solve();
        add();
    }
    error_norm();
    rhs_norm();
    exact_norm();
    residual_norm();
    verify();
    return 0;
}
