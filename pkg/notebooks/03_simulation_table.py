# %% [markdown]
# # Scenario grid and summary table
#
# Run several cohort sizes and subcohort fractions and print them side by
# side. The CLI `simulate` command does the same for a single config file
# and writes the long-format CSV.

# %%
from casecohort import ScenarioConfig, run_scenario
from casecohort.reporting import render_study_table, write_report_csv

grid = [(2000, 0.2), (4000, 0.2)]
reports = []
for n, fraction in grid:
    cfg = ScenarioConfig(n=n, subcohort_fraction=fraction, n_sims=100, B=100, master_seed=11)
    reports.append(run_scenario(cfg))

print(render_study_table(reports))

# %%
print(write_report_csv(reports[0])[:400])
