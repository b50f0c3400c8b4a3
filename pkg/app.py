import os

import pandas as pd
import streamlit as st

from src.cli import estimate_daily
from src.core import empirics
from src.core.fourier_core import kernel_identity_suite
from src.core.mc import ExperimentSpec, run_experiment
from src.data.data_importer import load_tick_file, read_daily_csv
from src.utils.config import (
    APP_TITLE,
    DEFAULT_ADAPTIVE,
    DEFAULT_CM,
    DEFAULT_LEVEL,
    DEFAULT_SEED,
    MIN_DAY_OBSERVATIONS,
    TEMP_DIR,
    version_string,
)
from src.utils.errors import VolvolError
from ui.common import create_success_error_message, create_two_column_metrics, show_table

# Set page configuration
st.set_page_config(
    page_title=APP_TITLE,
    layout="wide",
    initial_sidebar_state="expanded"
)


def main():
    """Main function to run the dashboard"""
    st.sidebar.title(APP_TITLE)

    nav_options = ["Home", "Estimate", "Monte Carlo", "Kernel Check", "Empirics"]

    if 'page' in st.session_state:
        selected_page = st.session_state.page
        page_index = nav_options.index(selected_page) if selected_page in nav_options else 0
    else:
        page_index = 0

    selected_page = st.sidebar.radio("Navigation", nav_options, index=page_index)

    if 'page' not in st.session_state or st.session_state.page != selected_page:
        st.session_state.page = selected_page

    try:
        if selected_page == "Home":
            display_home_page()
        elif selected_page == "Estimate":
            display_estimate_page()
        elif selected_page == "Monte Carlo":
            display_monte_carlo_page()
        elif selected_page == "Kernel Check":
            display_kernel_page()
        elif selected_page == "Empirics":
            display_empirics_page()
    except VolvolError as e:
        st.error(f"An error occurred: {str(e)}")

    st.sidebar.markdown("---")
    st.sidebar.info(f"Version {version_string()}")


def display_home_page():
    """Display the home page"""
    st.title(APP_TITLE)
    st.markdown("""
    Fourier estimators of the daily integrated volatility of volatility from
    high-frequency prices.

    ## Pages
    - **Estimate**: upload a `timestamp,price` tick CSV and estimate each day
    - **Monte Carlo**: run a small seeded simulation study
    - **Kernel Check**: verify the Dirichlet and Fejér kernel identities
    - **Empirics**: sample statistics of a daily estimate CSV

    Larger runs belong on the command line: `python scripts/run_volvol.py --help`.
    """)


def _save_upload(uploaded):
    os.makedirs(TEMP_DIR, exist_ok=True)
    path = TEMP_DIR / uploaded.name
    with open(path, "wb") as f:
        f.write(uploaded.getbuffer())
    return path


def display_estimate_page():
    """Estimate every day of an uploaded tick file"""
    st.header("Daily Estimation")
    uploaded = st.file_uploader("Tick CSV (timestamp,price[,date])", type=["csv"])
    col1, col2, col3 = st.columns(3)
    with col1:
        adaptive = st.checkbox("Adaptive c_M", value=True)
    with col2:
        c_M = st.number_input("c_M", value=DEFAULT_CM["heston"], min_value=0.001, format="%.3f",
                              disabled=adaptive)
    with col3:
        level = st.number_input("CI level", value=DEFAULT_LEVEL, min_value=0.5, max_value=0.999)

    if uploaded is None:
        st.info("Upload a file to start.")
        return

    success, message, ticks = load_tick_file(_save_upload(uploaded))
    create_success_error_message(success, message, message)
    if not success:
        return

    settings = {"cM": None if adaptive else c_M, "adaptive": adaptive, "level": level,
                "min_obs": MIN_DAY_OBSERVATIONS, **DEFAULT_ADAPTIVE}
    with st.spinner("Estimating..."):
        daily, skipped = estimate_daily(ticks, settings)
    create_two_column_metrics({"Days estimated": len(daily), "Days skipped": len(skipped)})
    show_table(daily, "Daily estimates", download_name="daily_estimates.csv")
    if skipped:
        show_table(pd.DataFrame(skipped, columns=["date", "reason"]), "Skipped days")


def display_monte_carlo_page():
    """Small seeded Monte Carlo run"""
    st.header("Monte Carlo")
    col1, col2, col3 = st.columns(3)
    with col1:
        model = st.selectbox("Model", ["heston", "svv"])
        paths = st.number_input("Paths", value=50, min_value=1, max_value=2000)
    with col2:
        mesh = st.selectbox("Mesh (seconds)", [300, 60, 30, 5, 1], index=1)
        seed = st.number_input("Seed", value=DEFAULT_SEED, step=1)
    with col3:
        estimators = st.multiselect("Estimators", ["fourier_debiased", "fourier_raw", "asj", "vetter"],
                                    default=["fourier_debiased"])

    if not st.button("Run", type="primary"):
        return
    spec = ExperimentSpec(model=model, n_paths=int(paths), mesh=float(mesh),
                          estimators=tuple(estimators), master_seed=int(seed))
    with st.spinner("Simulating..."):
        result = run_experiment(spec, workers=1)
    show_table(result.aggregates.reset_index(), "Aggregates")
    reference = result.reference()
    if reference:
        show_table(pd.DataFrame(reference).T.reset_index(names="estimator"),
                   "Published 10^4-path values")
    show_table(result.records, "Per-path records", download_name="experiment_paths.csv")


def display_kernel_page():
    """Run the kernel identity suite"""
    st.header("Kernel Identities")
    tol = st.number_input("Tolerance", value=1e-6, format="%.1e")
    report = kernel_identity_suite(tol=tol)
    failed = int((~report["passed"]).sum())
    create_success_error_message(failed == 0, f"All {len(report)} checks passed",
                                 f"{failed} of {len(report)} checks failed")
    show_table(report)


def display_empirics_page():
    """Sample statistics of a daily estimate file"""
    st.header("Empirics")
    uploaded = st.file_uploader("Daily estimate CSV", type=["csv"])
    if uploaded is None:
        st.info("Upload the output of the estimate command.")
        return
    daily = read_daily_csv(_save_upload(uploaded), ["integrated_volvol", "integrated_vol",
                                                    "daily_return"])
    series = [empirics.DailySeries.from_frame(daily, column, label=column)
              for column in ("integrated_volvol", "integrated_vol", "daily_return")]
    show_table(pd.DataFrame([empirics.sample_stats(s) for s in series]), "Sample statistics")
    show_table(empirics.yearly_correlations(*series), "Yearly correlations")


if __name__ == "__main__":
    main()
