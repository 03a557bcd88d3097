from evaluation.baselines import OracleScorer, RandomScorer
from ingest.synthetic import SyntheticConfig
from runs.artifacts import LOG_CSV, write_frame, write_summary
from runs.management.base import RunCommand, add_training_arguments, comma_list
from runs.registry import ModelKind, constraint_from, objective_config, training_config
from runs.serializers import SimulateRunSerializer
from sim.cycle import CycleConfig, Population, run_campaign


class Command(RunCommand):
    help = 'Simulate explore/exploit campaign cycles on a synthetic population'
    config_serializer = SimulateRunSerializer

    def add_run_arguments(self, parser):
        parser.add_argument('--n', type=int, help='Population size')
        parser.add_argument('--d', type=int, help='Number of features')
        parser.add_argument('--noise-sd', type=float, help='Outcome noise standard deviation')
        parser.add_argument('--cycles', type=int, help='Number of cycles; later cycles add a retrained DRM arm')
        parser.add_argument('--explore-fraction', type=float, help='Share of the population explored per cycle')
        parser.add_argument('--arms', type=comma_list, help="Baseline exploit arms: 'random', 'oracle'")
        add_training_arguments(parser)

    def run(self, config, out):
        seed = config['seed']
        synthetic = SyntheticConfig(n=config['n'], d=config['d'], noise_sd=config['noise_sd'])
        pop = Population.synthetic(synthetic, config['n'], seed)
        baselines = {
            ModelKind.RANDOM: lambda: RandomScorer(seed),
            ModelKind.ORACLE: lambda: OracleScorer(pop.model),
        }
        cycle_cfg = CycleConfig(
            population_size=config['n'],
            explore_fraction=config['explore_fraction'],
            treat_prob_explore=config['treat_prob_explore'],
            exploit_cutoff=constraint_from(config),
            exploit_treat_prob=config['exploit_treat_prob'],
            seed=seed,
        )
        log, reports = run_campaign(
            pop,
            cycle_cfg,
            config['cycles'],
            training_config(config),
            seed,
            baseline_models={arm: baselines[arm]() for arm in config['arms']},
            objective=objective_config(config),
        )
        write_frame(log.to_frame(), out / LOG_CSV)
        write_summary(
            out,
            {
                'population': pop.n,
                'cycle_config': cycle_cfg.to_document(),
                'logged_rows': log.dataset.n,
                'cycles': reports,
            },
        )
        last = reports[-1]
        gains = ", ".join(f"{arm} {metrics['efficiency_gain']:+.3f}" for arm, metrics in last.items())
        self.success(f"Simulated {config['cycles']} cycle(s); last cycle efficiency gains: {gains}")
